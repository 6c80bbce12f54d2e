#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "echoaudit/embed.hpp"
#include "echoaudit/logmodel.hpp"

namespace echoaudit {

/// Which designed cohort receives reinforcement and narrowing.
enum class EffectScope { followers, ignorers, all };

/// Seeded feedback-loop population.
///
/// Items are drawn from a mixture of `n_topics` Gaussians whose centres sit on
/// a sphere of radius `topic_radius`. Every user starts next to one topic
/// centre and then, day by day:
///  - drifts (`drift` is the per-day, per-dimension standard deviation),
///  - browses `pv_per_day` page views of `pv_size` items; a share of each page
///    comes from the `pool_size` items nearest the user's preference, growing
///    linearly over the run up to `narrowing_rate`, the rest is uniform,
///  - clicks at most one item per page view with probability
///    `follower_click_rate` / `ignorer_click_rate`,
///  - tops up to `clicks_per_day` clicks outside the recommender from
///    `pv_size` uniform candidates,
///  - purchases each clicked item with `purchase_probability`.
/// The clicked item is drawn from softmax(preference . item / temperature).
/// After every click on an item served from the preference neighbourhood, an
/// affected user's preference moves
/// `reinforcement_rate` of the way towards the clicked item.
struct SynthConfig {
  std::size_t n_users = 200;
  std::size_t n_items = 1000;
  std::size_t dim = 8;
  std::size_t n_days = 60;
  std::size_t n_topics = 10;
  double reinforcement_rate = 0.0;
  double narrowing_rate = 0.0;
  EffectScope effect_scope = EffectScope::followers;
  double follower_fraction = 0.5;
  double temperature = 0.5;
  double purchase_probability = 0.1;
  std::size_t pv_per_day = 4;
  std::size_t pv_size = 10;
  std::size_t clicks_per_day = 6;
  double follower_click_rate = 0.9;
  double ignorer_click_rate = 0.1;
  double drift = 0.1;
  std::size_t pool_size = 50;
  double topic_radius = 3.0;
  double topic_spread = 0.5;
  double user_spread = 0.3;
  std::int64_t start_timestamp = 1546300800;  // 2019-01-01T00:00:00Z
  std::uint64_t master_seed = 1;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

SynthConfig synth_config_from_json(std::string_view json_text);
std::string synth_config_to_json(const SynthConfig& config);

struct UserTruth {
  std::string user_id;
  bool designed_follower = false;
  std::size_t topic = 0;
  /// Preference at the end of each simulated day.
  std::vector<std::vector<double>> trajectory;
};

struct GroundTruth {
  std::vector<UserTruth> users;
};

struct SynthOutput {
  std::vector<InteractionRecord> browse;
  std::vector<InteractionRecord> click;
  std::vector<InteractionRecord> purchase;
  EmbeddingTable embeddings;
  GroundTruth truth;
};

SynthOutput generate(const SynthConfig& config);

/// browse.csv, click.csv, purchase.csv, embeddings.tsv, ground_truth.json.
void write_synth_output(const SynthOutput& output, const std::filesystem::path& dir);

}  // namespace echoaudit
