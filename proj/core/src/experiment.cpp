#include "echoaudit/experiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "echoaudit/error.hpp"
#include "echoaudit/sampling.hpp"
#include "echoaudit/seed.hpp"
#include "parallel.hpp"

namespace echoaudit {
namespace {

constexpr std::size_t kFollowing = 0;
constexpr std::size_t kIgnoring = 1;
constexpr std::size_t kAll = 2;

double p_value_or_nan(std::span<const double> a, std::span<const double> b) {
  auto finite = [](std::span<const double> s) {
    return std::all_of(s.begin(), s.end(), [](double v) { return std::isfinite(v); });
  };
  if (!finite(a) || !finite(b)) return std::numeric_limits<double>::quiet_NaN();
  return welch_t_test(a, b).p_value;
}

double mean_or_nan(std::span<const double> v) {
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : mean(v);
}

PointSet concat(const PointSet& a, const PointSet& b) {
  std::vector<double> values(a.values().begin(), a.values().end());
  values.insert(values.end(), b.values().begin(), b.values().end());
  std::vector<std::string> ids = a.ids();
  ids.insert(ids.end(), b.ids().begin(), b.ids().end());
  return PointSet(a.size() ? a.dim() : b.dim(), std::move(values), std::move(ids));
}

// Positions of `subset` inside sorted `universe`.
std::vector<std::size_t> positions(std::span<const std::string> universe, std::span<const std::string> subset) {
  std::vector<std::size_t> out;
  out.reserve(subset.size());
  for (const auto& id : subset) {
    auto it = std::lower_bound(universe.begin(), universe.end(), id);
    if (it == universe.end() || *it != id) throw ArgumentError("user '" + id + "' not in group");
    out.push_back(static_cast<std::size_t>(it - universe.begin()));
  }
  return out;
}

std::vector<std::string> merged(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::string> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

void finish_row(BlockComparisonRow& row) {
  row.first_mean = mean_or_nan(row.first_values);
  row.last_mean = mean_or_nan(row.last_values);
  row.within_p = p_value_or_nan(row.first_values, row.last_values);
}

BlockComparison assemble(std::array<BlockComparisonRow, 3> rows) {
  BlockComparison out;
  for (auto& r : rows) finish_row(r);
  out.between_first_p = p_value_or_nan(rows[kFollowing].first_values, rows[kIgnoring].first_values);
  out.between_last_p = p_value_or_nan(rows[kFollowing].last_values, rows[kIgnoring].last_values);
  out.rows = {std::move(rows[kAll]), std::move(rows[kFollowing]), std::move(rows[kIgnoring])};
  return out;
}

std::string offset_label(int o) { return o > 0 ? "+" + std::to_string(o) : std::to_string(o); }

}  // namespace

void SamplingPlan::validate() const {
  if (repetitions < 2) throw ConfigError("repetitions must be >= 2 so t-tests have a variance");
  for (double f : {p_fraction_default, p_fraction_hopkins}) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("sampling fractions must lie in (0, 1]");
  }
}

std::pair<PointSet, PointSet> GroupEmbeddings::select(std::span<const std::string> subset) const {
  const auto idx = positions(users, subset);
  return {first.subset(idx), last.subset(idx)};
}

GroupEmbeddings build_group_embeddings(std::span<const std::string> users, const BlocksByUser& blocks,
                                       const EmbeddingTable& table, MissingPolicy missing) {
  std::vector<std::string> sorted(users.begin(), users.end());
  std::sort(sorted.begin(), sorted.end());
  GroupEmbeddings g;
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> last;
  for (const auto& u : sorted) {
    auto it = blocks.find(u);
    if (it == blocks.end() || it->second.empty()) continue;
    first.push_back(block_embedding(it->second.front(), table, missing).vector);
    last.push_back(block_embedding(it->second.back(), table, missing).vector);
    g.users.push_back(u);
  }
  g.first = PointSet::from_rows(first, g.users);
  g.last = PointSet::from_rows(last, g.users);
  return g;
}

RepetitionSample draw_repetition_sample(std::span<const std::string> following,
                                        std::span<const std::string> ignoring, double fraction,
                                        std::uint64_t master_seed, std::string_view metric,
                                        std::size_t repetition) {
  const std::size_t target = std::min(following.size(), ignoring.size());
  RepetitionSample s;
  // Both cohorts draw from the same per-repetition streams.
  const auto resize_seed = derive_seed(master_seed, metric, {repetition, 0});
  const auto sample_seed = derive_seed(master_seed, metric, {repetition, 1});
  s.following_resized = resize_sample(following, target, resize_seed);
  s.ignoring_resized = resize_sample(ignoring, target, resize_seed);
  s.following = p_sample(s.following_resized, fraction, sample_seed);
  s.ignoring = p_sample(s.ignoring_resized, fraction, sample_seed);
  const auto pooled = merged(s.following_resized, s.ignoring_resized);
  s.all = p_sample(pooled, fraction, derive_seed(master_seed, metric, {repetition, 2}));
  return s;
}

const BlockComparisonRow& BlockComparison::row(std::string_view group) const {
  for (const auto& r : rows) {
    if (r.group == group) return r;
  }
  throw ArgumentError("no row '" + std::string(group) + "'");
}

// ------------------------------------------------------------ tendency

BlockComparison run_tendency(const CampaignGroups& groups, const SamplingPlan& plan,
                             const CampaignOptions& options) {
  plan.validate();
  const std::size_t reps = plan.repetitions;
  std::vector<std::array<double, 6>> values(reps);
  std::array<std::size_t, 3> amounts{};
  std::array<std::size_t, 3> samples{};

  detail::parallel_for(reps, options.threads, [&](std::size_t rep) {
    const auto s = draw_repetition_sample(groups.following.users, groups.ignoring.users,
                                          plan.p_fraction_hopkins, plan.master_seed, "hopkins", rep);
    auto [f_first, f_last] = groups.following.select(s.following_resized);
    auto [i_first, i_last] = groups.ignoring.select(s.ignoring_resized);
    const PointSet a_first = concat(f_first, i_first);
    const PointSet a_last = concat(f_last, i_last);
    struct Case {
      std::size_t slot;
      const PointSet* first;
      const PointSet* last;
      std::vector<std::size_t> sample;
    };
    // Row order inside the concatenated sets: following rows, then ignoring rows.
    std::vector<std::size_t> all_idx;
    for (const auto& id : s.all) {
      auto it = std::lower_bound(s.following_resized.begin(), s.following_resized.end(), id);
      if (it != s.following_resized.end() && *it == id) {
        all_idx.push_back(static_cast<std::size_t>(it - s.following_resized.begin()));
      } else {
        auto jt = std::lower_bound(s.ignoring_resized.begin(), s.ignoring_resized.end(), id);
        all_idx.push_back(s.following_resized.size() +
                          static_cast<std::size_t>(jt - s.ignoring_resized.begin()));
      }
    }
    const Case cases[] = {
        {kFollowing, &f_first, &f_last, positions(s.following_resized, s.following)},
        {kIgnoring, &i_first, &i_last, positions(s.ignoring_resized, s.ignoring)},
        {kAll, &a_first, &a_last, all_idx},
    };
    for (const auto& c : cases) {
      values[rep][c.slot * 2] = hopkins(*c.first, c.sample, derive_seed(plan.master_seed, "hopkins", {rep, 3}));
      values[rep][c.slot * 2 + 1] = hopkins(*c.last, c.sample, derive_seed(plan.master_seed, "hopkins", {rep, 3}));
    }
    if (rep == 0) {
      amounts = {s.following_resized.size(), s.ignoring_resized.size(),
                 s.following_resized.size() + s.ignoring_resized.size()};
      samples = {s.following.size(), s.ignoring.size(), s.all.size()};
    }
  });

  std::array<BlockComparisonRow, 3> rows;
  const char* names[] = {"following", "ignoring", "all"};
  for (std::size_t g = 0; g < 3; ++g) {
    rows[g].group = names[g];
    rows[g].amount = amounts[g];
    rows[g].sample_size = samples[g];
    for (std::size_t rep = 0; rep < reps; ++rep) {
      rows[g].first_values.push_back(values[rep][g * 2]);
      rows[g].last_values.push_back(values[rep][g * 2 + 1]);
    }
  }
  return assemble(std::move(rows));
}

// ------------------------------------------------------------ K selection

BicSelection run_k_selection(const CampaignGroups& groups, std::string_view which,
                             const SamplingPlan& plan, const KSelectionOptions& options) {
  plan.validate();
  const bool following = which == "following";
  if (!following && which != "ignoring") throw ArgumentError("group must be following or ignoring");
  const std::size_t n = p_sample_size(std::min(groups.following.size(), groups.ignoring.size()),
                                      plan.p_fraction_default);
  if (n < 3) throw ArgumentError("too few users for BIC model selection");
  const std::size_t k_hi = std::min(options.k_max, n - 1);
  if (options.k_min < 1 || options.k_min > k_hi) throw ArgumentError("empty k range for BIC selection");
  std::vector<std::size_t> ks;
  for (std::size_t k = options.k_min; k <= k_hi; ++k) ks.push_back(k);

  const std::size_t reps = plan.repetitions;
  std::vector<std::vector<double>> curves(reps);
  auto select = options.select;
  select.threads = 1;
  detail::parallel_for(reps, options.select.threads, [&](std::size_t rep) {
    const auto s = draw_repetition_sample(groups.following.users, groups.ignoring.users,
                                          plan.p_fraction_default, plan.master_seed, "bic", rep);
    const auto& group = following ? groups.following : groups.ignoring;
    const auto points = group.select(following ? s.following : s.ignoring).first;
    const auto res = select_k(points, ks, 1, derive_seed(plan.master_seed, "bic", {rep, 3}),
                              select);
    for (const auto& [k, v] : res.curve) curves[rep].push_back(v);
  });

  BicSelection out;
  std::vector<double> curve(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    long double acc = 0.0L;
    for (std::size_t rep = 0; rep < reps; ++rep) acc += curves[rep][i];
    curve[i] = static_cast<double>(acc / static_cast<long double>(reps));
    out.curve.emplace_back(ks[i], curve[i]);
  }
  out.k_star = ks[pick_peak(curve, options.select.strategy, options.select.decisive_fraction)];
  return out;
}

// ------------------------------------------------------------ reinforcement

ReinforcementSection run_reinforcement(const CampaignGroups& groups, const SamplingPlan& plan,
                                       std::size_t k_star_following, std::size_t k_star_ignoring,
                                       std::size_t k_window, const CampaignOptions& options) {
  plan.validate();
  ReinforcementSection out;
  out.k_star_following = k_star_following;
  out.k_star_ignoring = k_star_ignoring;
  const std::size_t n = p_sample_size(std::min(groups.following.size(), groups.ignoring.size()),
                                      plan.p_fraction_default);
  out.sample_size = n;

  const int w = static_cast<int>(k_window);
  std::vector<int> offsets;
  for (int o = -w; o <= w; ++o) {
    const long kf = static_cast<long>(k_star_following) + o;
    const long ki = static_cast<long>(k_star_ignoring) + o;
    const long hi = static_cast<long>(n) - 1;
    if (kf < 2 || ki < 2 || kf > hi || ki > hi) {
      out.warnings.push_back("k offset " + offset_label(o) + " dropped: k outside [2, " +
                             std::to_string(hi) + "]");
      continue;
    }
    offsets.push_back(o);
  }
  if (offsets.empty()) throw ArgumentError("no k in the window fits the sample size");

  const std::size_t reps = plan.repetitions;
  const std::size_t m = offsets.size();
  // [rep][group][offset]
  std::vector<double> ch(reps * 2 * m);
  std::vector<double> ari(reps * 2 * m);
  const std::size_t k_star[2] = {k_star_following, k_star_ignoring};

  detail::parallel_for(reps, options.threads, [&](std::size_t rep) {
    const auto s = draw_repetition_sample(groups.following.users, groups.ignoring.users,
                                          plan.p_fraction_default, plan.master_seed, "reinforcement", rep);
    for (std::size_t g = 0; g < 2; ++g) {
      const auto& group = g == kFollowing ? groups.following : groups.ignoring;
      const auto [first, last] = group.select(g == kFollowing ? s.following : s.ignoring);
      for (std::size_t oi = 0; oi < m; ++oi) {
        const std::size_t k = static_cast<std::size_t>(static_cast<long>(k_star[g]) + offsets[oi]);
        const auto p = kmeans(first, k, derive_seed(plan.master_seed, "reinforcement", {rep, k, 3}),
                              options.kmeans);
        const double ch_first = calinski_harabasz(first, p.labels, options.ch_variant);
        double ch_last = std::numeric_limits<double>::infinity();
        try {
          ch_last = calinski_harabasz(last, p.labels, options.ch_variant);
        } catch (const DegenerateGeometryError&) {
        }
        const auto q = kmeans(last, k, derive_seed(plan.master_seed, "reinforcement", {rep, k, 3}),
                              options.kmeans);
        const std::size_t slot = (rep * 2 + g) * m + oi;
        ch[slot] = ch_first - ch_last;
        ari[slot] = adjusted_rand_index(p.labels, q.labels);
      }
    }
  });

  auto build = [&](const std::vector<double>& values) {
    IndexTable table;
    OffsetRow ave;
    ave.label = "AVE";
    for (std::size_t rep = 0; rep < reps; ++rep) {
      for (std::size_t g = 0; g < 2; ++g) {
        long double acc = 0.0L;
        for (std::size_t oi = 0; oi < m; ++oi) acc += values[(rep * 2 + g) * m + oi];
        (g == kFollowing ? ave.following_values : ave.ignoring_values)
            .push_back(static_cast<double>(acc / static_cast<long double>(m)));
      }
    }
    for (std::size_t oi = 0; oi < m; ++oi) {
      OffsetRow row;
      row.offset = offsets[oi];
      row.label = offset_label(offsets[oi]);
      row.k_following = static_cast<std::size_t>(static_cast<long>(k_star_following) + offsets[oi]);
      row.k_ignoring = static_cast<std::size_t>(static_cast<long>(k_star_ignoring) + offsets[oi]);
      for (std::size_t rep = 0; rep < reps; ++rep) {
        row.following_values.push_back(values[(rep * 2 + kFollowing) * m + oi]);
        row.ignoring_values.push_back(values[(rep * 2 + kIgnoring) * m + oi]);
      }
      row.following_mean = mean(row.following_values);
      row.ignoring_mean = mean(row.ignoring_values);
      row.p_value = p_value_or_nan(row.following_values, row.ignoring_values);
      table.rows.push_back(std::move(row));
    }
    // AVE is the mean of the per-k means; the p-value uses per-repetition averages.
    long double f = 0.0L;
    long double i = 0.0L;
    for (const auto& r : table.rows) {
      f += r.following_mean;
      i += r.ignoring_mean;
    }
    ave.following_mean = static_cast<double>(f / static_cast<long double>(m));
    ave.ignoring_mean = static_cast<double>(i / static_cast<long double>(m));
    ave.p_value = p_value_or_nan(ave.following_values, ave.ignoring_values);
    table.average = std::move(ave);
    return table;
  };
  out.ch_drop = build(ch);
  out.ari = build(ari);
  return out;
}

// ------------------------------------------------------------ diversity

UserDiversity compute_user_diversity(std::span<const std::string> users, const BlocksByUser& browse_blocks,
                                     const EmbeddingTable& table, MissingPolicy missing) {
  std::vector<std::string> sorted(users.begin(), users.end());
  std::sort(sorted.begin(), sorted.end());
  UserDiversity out;
  for (const auto& u : sorted) {
    auto it = browse_blocks.find(u);
    if (it == browse_blocks.end() || it->second.empty()) continue;
    const auto first = block_item_vectors(it->second.front(), table, missing);
    const auto last = block_item_vectors(it->second.back(), table, missing);
    out.users.push_back(u);
    out.first.push_back(mean_pairwise_distance(first));
    out.last.push_back(mean_pairwise_distance(last));
  }
  return out;
}

BlockComparison run_diversity(const DiversityGroups& groups, const SamplingPlan& plan,
                              const CampaignOptions& options) {
  plan.validate();
  const std::size_t reps = plan.repetitions;
  std::vector<std::array<double, 6>> values(reps);
  std::array<std::size_t, 3> amounts{};
  std::array<std::size_t, 3> samples{};

  auto lookup = [](const UserDiversity& d, const std::string& id) -> std::pair<double, double> {
    auto it = std::lower_bound(d.users.begin(), d.users.end(), id);
    if (it == d.users.end() || *it != id) return {std::nan(""), std::nan("")};
    const auto i = static_cast<std::size_t>(it - d.users.begin());
    return {d.first[i], d.last[i]};
  };
  auto group_means = [&](std::span<const std::string> ids) {
    long double f = 0.0L;
    long double l = 0.0L;
    for (const auto& id : ids) {
      auto v = lookup(groups.following, id);
      if (std::isnan(v.first)) v = lookup(groups.ignoring, id);
      f += v.first;
      l += v.second;
    }
    const auto n = static_cast<long double>(ids.size());
    return std::pair<double, double>{static_cast<double>(f / n), static_cast<double>(l / n)};
  };

  detail::parallel_for(reps, options.threads, [&](std::size_t rep) {
    const auto s = draw_repetition_sample(groups.following.users, groups.ignoring.users,
                                          plan.p_fraction_default, plan.master_seed, "diversity", rep);
    const std::span<const std::string> picks[3] = {s.following, s.ignoring, s.all};
    for (std::size_t g = 0; g < 3; ++g) {
      const auto [f, l] = group_means(picks[g]);
      values[rep][g * 2] = f;
      values[rep][g * 2 + 1] = l;
    }
    if (rep == 0) {
      amounts = {s.following_resized.size(), s.ignoring_resized.size(),
                 s.following_resized.size() + s.ignoring_resized.size()};
      samples = {s.following.size(), s.ignoring.size(), s.all.size()};
    }
  });

  std::array<BlockComparisonRow, 3> rows;
  const char* names[] = {"following", "ignoring", "all"};
  for (std::size_t g = 0; g < 3; ++g) {
    rows[g].group = names[g];
    rows[g].amount = amounts[g];
    rows[g].sample_size = samples[g];
    for (std::size_t rep = 0; rep < reps; ++rep) {
      rows[g].first_values.push_back(values[rep][g * 2]);
      rows[g].last_values.push_back(values[rep][g * 2 + 1]);
    }
  }
  return assemble(std::move(rows));
}

}  // namespace echoaudit
