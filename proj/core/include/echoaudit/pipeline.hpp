#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "echoaudit/blocks.hpp"
#include "echoaudit/cluster.hpp"
#include "echoaudit/cohort.hpp"
#include "echoaudit/embed.hpp"
#include "echoaudit/experiment.hpp"
#include "echoaudit/logmodel.hpp"
#include "echoaudit/report.hpp"

namespace echoaudit {

struct RunConfig {
  std::filesystem::path browse_log;
  std::filesystem::path click_log;
  std::filesystem::path purchase_log;  // optional; empty skips the purchase campaign
  std::filesystem::path embeddings;
  /// Unset: chosen per file from its extension (.jsonl / .json -> jsonl).
  std::optional<LogFormat> log_format;
  bool lenient = false;

  BlockSizes block_sizes;
  CohortThresholds thresholds;
  std::size_t min_blocks = 3;
  std::optional<std::int64_t> trim_before;
  MissingPolicy missing_items = MissingPolicy::error;

  SamplingPlan plan;
  std::size_t k_window = 5;
  std::size_t k_min = 2;
  std::size_t k_max = 30;
  BicOptions bic;
  KSelection k_selection = KSelection::global_max;
  ChVariant ch_variant = ChVariant::unweighted;

  /// Campaign kinds run for tendency and reinforcement (click, purchase).
  std::vector<InteractionKind> campaigns{InteractionKind::click, InteractionKind::purchase};
  bool diversity = true;

  unsigned threads = 0;  // 0: hardware concurrency
  std::filesystem::path output_dir = "results";

  /// Throws ConfigError. With `check_files`, every referenced input must exist.
  void validate(bool check_files = true) const;
};

/// Flat JSON object with keys: browse_log, click_log, purchase_log,
/// embeddings, log_format, lenient, browse_block_size, click_block_size,
/// purchase_block_size, cohort_lo, cohort_hi, cohort_percentile, min_blocks,
/// trim_before, missing_items, repetitions, p_fraction, p_fraction_hopkins,
/// seed, k_window, k_min, k_max, bic_variant, bic_squared_norm, k_selection,
/// ch_variant, campaigns, diversity, threads, out. Relative paths resolve
/// against `base_dir`. Unknown keys are a ConfigError.
RunConfig run_config_from_json(std::string_view text, const std::filesystem::path& base_dir = {});

/// min(requested or hardware concurrency, ECHO_AUDIT_THREADS when set), >= 1.
unsigned effective_threads(unsigned requested);

using ProgressFn = std::function<void(std::string_view)>;

/// ingest -> cohort -> blocks -> eligibility -> embeddings -> K* -> campaigns.
/// Missing inputs fail with a StageError naming the stage that needs them.
/// Input stages throw StageError before anything is written. A failing
/// campaign is recorded in the report and the remaining ones still run;
/// the report files are rewritten after every campaign.
ExperimentReport run_pipeline(const RunConfig& config, const ProgressFn& progress = {});

}  // namespace echoaudit
