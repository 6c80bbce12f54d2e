#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "echoaudit/blocks.hpp"
#include "echoaudit/cluster.hpp"
#include "echoaudit/embed.hpp"
#include "echoaudit/stats.hpp"

namespace echoaudit {

struct SamplingPlan {
  std::size_t repetitions = 50;
  double p_fraction_default = 0.8;
  double p_fraction_hopkins = 0.1;
  std::uint64_t master_seed = 0;

  void validate() const;
};

/// First- and last-block embeddings of one cohort; `first.ids()` and
/// `last.ids()` both equal `users` (sorted).
struct GroupEmbeddings {
  std::vector<std::string> users;
  PointSet first;
  PointSet last;

  std::size_t size() const noexcept { return users.size(); }
  /// Rows of the given users, in the order given.
  std::pair<PointSet, PointSet> select(std::span<const std::string> subset) const;
};

struct CampaignGroups {
  GroupEmbeddings following;
  GroupEmbeddings ignoring;
};

/// Builds the group from each user's first and last block (block ordinals 0
/// and count-1). Users without blocks are skipped.
GroupEmbeddings build_group_embeddings(std::span<const std::string> users, const BlocksByUser& blocks,
                                       const EmbeddingTable& table,
                                       MissingPolicy missing = MissingPolicy::error);

/// One repetition's draw: the larger cohort is resized to the smaller one's
/// size, then each side (and the pooled union) is p-sampled.
struct RepetitionSample {
  std::vector<std::string> following_resized;
  std::vector<std::string> ignoring_resized;
  std::vector<std::string> following;
  std::vector<std::string> ignoring;
  std::vector<std::string> all;
};

RepetitionSample draw_repetition_sample(std::span<const std::string> following,
                                        std::span<const std::string> ignoring, double fraction,
                                        std::uint64_t master_seed, std::string_view metric,
                                        std::size_t repetition);

// ------------------------------------------------------------ report pieces

/// One row of a first-block/last-block table (Hopkins, content diversity).
struct BlockComparisonRow {
  std::string group;           // "all", "following", "ignoring"
  std::size_t amount = 0;      // users after resize-sampling
  std::size_t sample_size = 0; // users per repetition after p-sampling
  double first_mean = 0.0;
  double last_mean = 0.0;
  double within_p = 1.0;
  std::vector<double> first_values;  // one per repetition
  std::vector<double> last_values;
};

struct BlockComparison {
  std::vector<BlockComparisonRow> rows;  // all, following, ignoring
  double between_first_p = 1.0;
  double between_last_p = 1.0;

  const BlockComparisonRow& row(std::string_view group) const;
};

struct BicSelection {
  std::size_t k_star = 0;
  std::vector<std::pair<std::size_t, double>> curve;
};

struct OffsetRow {
  std::string label;  // "-5".."+5" or "AVE"
  int offset = 0;
  std::size_t k_following = 0;
  std::size_t k_ignoring = 0;
  double following_mean = 0.0;
  double ignoring_mean = 0.0;
  double p_value = 1.0;
  std::vector<double> following_values;
  std::vector<double> ignoring_values;
};

struct IndexTable {
  std::vector<OffsetRow> rows;
  OffsetRow average;
};

struct ReinforcementSection {
  std::size_t k_star_following = 0;
  std::size_t k_star_ignoring = 0;
  std::size_t sample_size = 0;
  IndexTable ch_drop;
  IndexTable ari;
  std::vector<std::string> warnings;
};

struct CampaignOptions {
  unsigned threads = 1;
  KMeansOptions kmeans;
  ChVariant ch_variant = ChVariant::unweighted;
};

struct KSelectionOptions {
  std::size_t k_min = 2;
  std::size_t k_max = 30;
  SelectKOptions select;
};

// ------------------------------------------------------------ campaigns

/// Hopkins statistic on first and last blocks for Following, Ignoring and
/// the pooled population. Each repetition resizes the larger cohort; the
/// Hopkins sample is the p_fraction_hopkins share of the resized group.
BlockComparison run_tendency(const CampaignGroups& groups, const SamplingPlan& plan,
                             const CampaignOptions& options = {});

/// BIC curve averaged over repetitions of resize + p-sampling on the
/// group's first-block embeddings. `which` is "following" or "ignoring".
BicSelection run_k_selection(const CampaignGroups& groups, std::string_view which,
                             const SamplingPlan& plan, const KSelectionOptions& options);

/// CH drop under fixed first-block labels and first-vs-last ARI for
/// k in [K* - window, K* + window], clipped to [2, sample - 1].
ReinforcementSection run_reinforcement(const CampaignGroups& groups, const SamplingPlan& plan,
                                       std::size_t k_star_following, std::size_t k_star_ignoring,
                                       std::size_t k_window = 5, const CampaignOptions& options = {});

/// Per-user content diversity of the first and last blocks.
struct UserDiversity {
  std::vector<std::string> users;  // sorted
  std::vector<double> first;
  std::vector<double> last;
};

struct DiversityGroups {
  UserDiversity following;
  UserDiversity ignoring;
};

UserDiversity compute_user_diversity(std::span<const std::string> users, const BlocksByUser& browse_blocks,
                                     const EmbeddingTable& table,
                                     MissingPolicy missing = MissingPolicy::error);

BlockComparison run_diversity(const DiversityGroups& groups, const SamplingPlan& plan,
                              const CampaignOptions& options = {});

}  // namespace echoaudit
