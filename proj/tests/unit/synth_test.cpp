#include <cmath>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "echoaudit/cluster.hpp"
#include "echoaudit/cohort.hpp"
#include "echoaudit/error.hpp"
#include "echoaudit/synth.hpp"
#include "fixtures.hpp"

using namespace echoaudit;

namespace {

SynthConfig small(double beta, double gamma, std::uint64_t seed) {
  SynthConfig c;
  c.n_users = 40;
  c.n_items = 400;
  c.n_days = 30;
  c.reinforcement_rate = beta;
  c.narrowing_rate = gamma;
  c.master_seed = seed;
  return c;
}

double pv_diversity(const PageView& pv, const EmbeddingTable& t) {
  std::vector<std::vector<double>> v;
  for (const auto& item : pv.items) {
    const auto row = *t.find(item.item_id);
    v.emplace_back(row.begin(), row.end());
  }
  return mean_pairwise_distance(v);
}

// Mean diversity of each user's first and last `days` worth of page views.
struct Exposure {
  std::vector<double> first;
  std::vector<double> last;
  std::vector<bool> follower;
};

Exposure exposure_diversity(const SynthOutput& out, std::size_t pvs_per_end) {
  Exposure e;
  const auto idx = group_page_views(out.browse);
  for (const auto& u : out.truth.users) {
    const auto& pvs = idx.at(u.user_id);
    double f = 0, l = 0;
    for (std::size_t i = 0; i < pvs_per_end; ++i) {
      f += pv_diversity(pvs[i], out.embeddings);
      l += pv_diversity(pvs[pvs.size() - 1 - i], out.embeddings);
    }
    e.first.push_back(f / static_cast<double>(pvs_per_end));
    e.last.push_back(l / static_cast<double>(pvs_per_end));
    e.follower.push_back(u.designed_follower);
  }
  return e;
}

double mean_drop(const Exposure& e, bool followers) {
  double s = 0;
  int n = 0;
  for (std::size_t i = 0; i < e.first.size(); ++i) {
    if (e.follower[i] != followers) continue;
    s += e.first[i] - e.last[i];
    ++n;
  }
  return s / n;
}

}  // namespace

TEST(SynthConfig, Validation) {
  auto bad = [](auto mutate) {
    SynthConfig c;
    mutate(c);
    return c;
  };
  EXPECT_NO_THROW(SynthConfig{}.validate());
  EXPECT_THROW(bad([](SynthConfig& c) { c.n_users = 1; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SynthConfig& c) { c.n_items = 1; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SynthConfig& c) { c.narrowing_rate = 1.5; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SynthConfig& c) { c.reinforcement_rate = -0.1; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SynthConfig& c) { c.temperature = 0; }).validate(), ConfigError);
  EXPECT_THROW(bad([](SynthConfig& c) { c.pool_size = 5; }).validate(), ConfigError);
  EXPECT_THROW(generate(bad([](SynthConfig& c) { c.follower_fraction = 2; })), ConfigError);
}

TEST(SynthConfig, JsonRoundTripAndUnknownKeys) {
  SynthConfig c;
  c.n_users = 77;
  c.reinforcement_rate = 0.25;
  c.effect_scope = EffectScope::all;
  c.master_seed = 123456789012345ULL;
  const auto back = synth_config_from_json(synth_config_to_json(c));
  EXPECT_EQ(back.n_users, 77u);
  EXPECT_EQ(back.reinforcement_rate, 0.25);
  EXPECT_EQ(back.effect_scope, EffectScope::all);
  EXPECT_EQ(back.master_seed, c.master_seed);
  EXPECT_THROW(synth_config_from_json("{\"n_user\": 3}"), ConfigError);
  EXPECT_THROW(synth_config_from_json("{\"n_users\": \"many\"}"), ConfigError);
  EXPECT_THROW(synth_config_from_json("[1]"), ConfigError);
  EXPECT_THROW(synth_config_from_json("{\"effect_scope\": \"some\"}"), ConfigError);
}

TEST(Synth, LogsRoundTripThroughParser) {
  const auto out = generate(small(0.3, 0.5, 1));
  for (auto [kind, records] : {std::pair{InteractionKind::browse, &out.browse},
                               std::pair{InteractionKind::click, &out.click},
                               std::pair{InteractionKind::purchase, &out.purchase}}) {
    ASSERT_FALSE(records->empty());
    std::stringstream ss;
    write_log(kind, *records, ss, LogFormat::csv);
    const auto back = parse_log(kind, ss, LogFormat::csv, ParseOptions{true});
    EXPECT_EQ(back.skipped, 0u);
    EXPECT_EQ(back.records, *records);
    for (std::size_t i = 1; i < records->size(); ++i) {
      const auto& a = (*records)[i - 1];
      const auto& b = (*records)[i];
      EXPECT_TRUE(std::tie(a.timestamp, a.user_id, a.pv_id) <= std::tie(b.timestamp, b.user_id, b.pv_id));
    }
  }
  EXPECT_NO_THROW(group_page_views(out.browse));
  EXPECT_LT(out.purchase.size(), out.click.size());
  for (const auto& r : out.click) EXPECT_TRUE(out.embeddings.contains(r.item_id));
}

TEST(Synth, DeterministicPerSeed) {
  const auto a = generate(small(0.3, 0.5, 4));
  const auto b = generate(small(0.3, 0.5, 4));
  EXPECT_EQ(a.browse, b.browse);
  EXPECT_EQ(a.click, b.click);
  EXPECT_EQ(a.purchase, b.purchase);
  const auto c = generate(small(0.3, 0.5, 5));
  EXPECT_NE(a.click, c.click);
}

TEST(Synth, TrajectoryCoversEveryDay) {
  const auto out = generate(small(0, 0, 2));
  ASSERT_EQ(out.truth.users.size(), 40u);
  for (const auto& u : out.truth.users) EXPECT_EQ(u.trajectory.size(), 30u);
}

TEST(Synth, PvrIsBimodalAtDesignedLevels) {
  SynthConfig c;
  c.n_users = 100;
  c.n_items = 1000;
  c.n_days = 60;
  const auto out = generate(c);
  const auto pvr = compute_pvr(group_page_views(out.browse));
  for (const auto& u : out.truth.users) {
    const double p = pvr.entries.at(u.user_id).pvr;
    if (u.designed_follower) {
      EXPECT_NEAR(p, c.follower_click_rate, 0.1);
    } else {
      EXPECT_NEAR(p, c.ignorer_click_rate, 0.1);
    }
  }
  const auto split = split_cohorts(pvr);
  EXPECT_EQ(split.following.size() + split.ignoring.size(), 100u);
}

TEST(Synth, ReinforcementPullsPreferenceTowardClicks) {
  // Mean distance from the day's preference to the items clicked that day.
  auto gap = [](const SynthOutput& out, const SynthConfig& c, bool followers) {
    std::map<std::string, const UserTruth*> truth;
    for (const auto& u : out.truth.users) truth[u.user_id] = &u;
    double s = 0;
    int n = 0;
    for (const auto& r : out.click) {
      const auto* u = truth.at(r.user_id);
      if (u->designed_follower != followers) continue;
      const auto day = static_cast<std::size_t>((r.timestamp - c.start_timestamp) / 86400);
      const auto row = *out.embeddings.find(r.item_id);
      s += std::sqrt(squared_distance(u->trajectory[day], std::vector<double>(row.begin(), row.end())));
      ++n;
    }
    return s / n;
  };
  const auto cw = small(0.3, 0.5, 6);
  const auto cn = small(0.0, 0.5, 6);
  const auto with = generate(cw);
  const auto without = generate(cn);
  EXPECT_LT(gap(with, cw, true), 0.9 * gap(without, cn, true));
  EXPECT_DOUBLE_EQ(gap(with, cw, false), gap(without, cn, false));
}

TEST(Synth, NarrowingLowersFollowerExposureDiversityOnly) {
  const auto narrowed = exposure_diversity(generate(small(0.0, 0.5, 7)), 4);
  const auto flat = exposure_diversity(generate(small(0.0, 0.0, 7)), 4);
  EXPECT_GT(mean_drop(narrowed, true) - mean_drop(flat, true), 0.3);
  EXPECT_DOUBLE_EQ(mean_drop(narrowed, false), mean_drop(flat, false));
}

TEST(Synth, NullExposureDiversityIsFlat) {
  // Paired t over users, first vs last day of page views.
  int accepted = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto e = exposure_diversity(generate(small(0, 0, 100 + seed)), 4);
    std::vector<double> d;
    for (std::size_t i = 0; i < e.first.size(); ++i) d.push_back(e.first[i] - e.last[i]);
    const double n = static_cast<double>(d.size());
    double m = 0;
    for (double x : d) m += x;
    m /= n;
    double v = 0;
    for (double x : d) v += (x - m) * (x - m);
    v /= n - 1;
    const double t = m / std::sqrt(v / n);
    accepted += std::abs(t) < 2.023;  // two-sided 5% critical value, 39 df
  }
  EXPECT_GE(accepted, 8);
}

TEST(Synth, LargerNarrowingGivesLargerDrop) {
  std::vector<double> drops;
  for (double gamma : {0.0, 0.3, 0.6}) {
    double total = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto c = small(0.0, gamma, 300 + seed);
      c.n_users = 20;
      c.n_days = 15;
      total += mean_drop(exposure_diversity(generate(c), 4), true);
    }
    drops.push_back(total / 20);
  }
  EXPECT_LT(drops[0], drops[1]);
  EXPECT_LT(drops[1], drops[2]);
}

TEST(Synth, WritesAllArtifacts) {
  fixtures::TempDir dir("synth");
  const auto out = generate(small(0.1, 0.1, 8));
  write_synth_output(out, dir.path());
  for (const char* f : {"browse.csv", "click.csv", "purchase.csv", "embeddings.tsv", "ground_truth.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / f)) << f;
  }
  const auto back = parse_log_file(InteractionKind::click, (dir.path() / "click.csv").string(), LogFormat::csv);
  EXPECT_EQ(back.records, out.click);
  const auto table = load_embedding_table_file((dir.path() / "embeddings.tsv").string());
  EXPECT_EQ(table.size(), 400u);
}
