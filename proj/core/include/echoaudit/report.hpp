#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "echoaudit/experiment.hpp"

namespace echoaudit {

struct CohortSummary {
  std::size_t following = 0;
  std::size_t ignoring = 0;
  std::size_t unassigned = 0;
  std::size_t excluded = 0;  // users without page views
  double lo = 0.0;
  double hi = 0.0;
};

/// Tendency and reinforcement results for one interaction kind.
struct CampaignReport {
  std::string kind;  // "click" or "purchase"
  std::size_t following_users = 0;  // eligible users per cohort
  std::size_t ignoring_users = 0;
  std::optional<BicSelection> bic_following;
  std::optional<BicSelection> bic_ignoring;
  std::optional<BlockComparison> tendency;
  std::optional<ReinforcementSection> reinforcement;
  /// Set when the campaign aborted; `stage: message`.
  std::optional<std::string> error;
};

struct ExperimentReport {
  std::uint64_t master_seed = 0;
  std::size_t repetitions = 0;
  double p_fraction_default = 0.0;
  double p_fraction_hopkins = 0.0;
  std::optional<CohortSummary> cohorts;
  std::vector<CampaignReport> campaigns;
  std::optional<BlockComparison> diversity;
  std::optional<std::string> diversity_error;

  bool complete() const noexcept;
};

/// Deterministic, key-ordered JSON. Non-finite numbers become the strings
/// "inf", "-inf" and "nan".
std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(std::string_view text);

/// Detected iff, on the AVE row, Following's CH drop is smaller than
/// Ignoring's and Following's ARI is larger, both with p < alpha.
bool reinforcement_detected(const CampaignReport& campaign, double alpha = 0.05);
std::string decision_line(const CampaignReport& campaign);

/// `user_type,amount,first_block,last_block,p_value` plus a between-group row.
std::string block_comparison_csv(const BlockComparison& table);
/// `k_offset,following,ignoring,p_value` plus the AVE row.
std::string index_table_csv(const IndexTable& table);
/// `k,value`
std::string bic_curve_csv(const BicSelection& selection);

/// Markdown summary; every number is a report value printed with 4 decimals
/// (means fixed-point, p-values in scientific notation).
std::string render_markdown(const ExperimentReport& report);

/// report.json, summary.md and the per-table CSVs. Click campaign tables use
/// the bare names (hopkins.csv, ch_drop.csv, ari.csv, bic_curve_<group>.csv);
/// other kinds add a `_<kind>` suffix.
void write_report_files(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace echoaudit
