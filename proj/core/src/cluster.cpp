#include "echoaudit/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "echoaudit/error.hpp"
#include "echoaudit/seed.hpp"
#include "parallel.hpp"

namespace echoaudit {
namespace {

std::uint64_t choose2(std::uint64_t n) noexcept { return n < 2 ? 0 : n * (n - 1) / 2; }

// Maps arbitrary labels onto 0..K-1 following their sorted order.
std::vector<std::size_t> compact_labels(std::span<const Label> labels, std::size_t& k) {
  std::vector<Label> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  k = distinct.size();
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i] = static_cast<std::size_t>(
        std::lower_bound(distinct.begin(), distinct.end(), labels[i]) - distinct.begin());
  }
  return out;
}

void compute_means(const PointSet& points, std::span<const Label> labels, std::size_t k,
                   std::vector<double>& centroids, std::vector<std::size_t>& sizes) {
  const std::size_t dim = points.dim();
  std::vector<long double> sums(k * dim, 0.0L);
  sizes.assign(k, 0);
  for (std::size_t j = 0; j < points.size(); ++j) {
    const auto x = points[j];
    auto* s = sums.data() + labels[j] * dim;
    for (std::size_t d = 0; d < dim; ++d) s[d] += x[d];
    ++sizes[labels[j]];
  }
  centroids.assign(k * dim, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (sizes[i] == 0) continue;
    for (std::size_t d = 0; d < dim; ++d) {
      centroids[i * dim + d] = static_cast<double>(sums[i * dim + d] / sizes[i]);
    }
  }
}

double inertia(const PointSet& points, std::span<const Label> labels,
               const std::vector<double>& centroids) {
  const std::size_t dim = points.dim();
  long double total = 0.0L;
  for (std::size_t j = 0; j < points.size(); ++j) {
    total += squared_distance(points[j], {centroids.data() + labels[j] * dim, dim});
  }
  return static_cast<double>(total);
}

// Partial Fisher-Yates: m distinct indices from [0, n).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(m);
  return idx;
}

// Index drawn with probability proportional to d2; falls back to a uniform
// unchosen point when every remaining point sits on a centre.
std::size_t draw_d2(std::span<const double> d2, std::span<const char> chosen, std::mt19937_64& rng) {
  const std::size_t n = d2.size();
  long double total = 0.0L;
  for (double v : d2) total += v;
  if (total > 0.0L) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const long double target = u(rng) * total;
    long double acc = 0.0L;
    std::size_t last = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (d2[j] <= 0.0) continue;
      last = j;
      acc += d2[j];
      if (acc >= target) return j;
    }
    return last;  // rounding at the tail
  }
  std::vector<std::size_t> free;
  for (std::size_t j = 0; j < n; ++j) {
    if (!chosen[j]) free.push_back(j);
  }
  std::uniform_int_distribution<std::size_t> any(0, free.size() - 1);
  return free[any(rng)];
}

// Greedy k-means++: each centre is the best of `trials` D^2-weighted draws,
// judged by the resulting potential. One trial is the classic scheme.
std::vector<double> seed_plus_plus(const PointSet& points, std::size_t k, std::size_t trials,
                                   std::mt19937_64& rng) {
  const std::size_t n = points.size();
  const std::size_t dim = points.dim();
  if (trials == 0) trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::vector<double> centroids;
  centroids.reserve(k * dim);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<char> chosen(n, 0);
  std::vector<double> trial_d2(n);
  std::vector<double> best_d2(n);

  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t pick = 0;
    if (c == 0) {
      pick = first(rng);
      const auto x = points[pick];
      for (std::size_t j = 0; j < n; ++j) best_d2[j] = squared_distance(points[j], x);
    } else {
      long double best_potential = std::numeric_limits<long double>::infinity();
      for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t candidate = draw_d2(d2, chosen, rng);
        const auto x = points[candidate];
        long double potential = 0.0L;
        for (std::size_t j = 0; j < n; ++j) {
          trial_d2[j] = std::min(d2[j], squared_distance(points[j], x));
          potential += trial_d2[j];
        }
        if (potential < best_potential) {
          best_potential = potential;
          pick = candidate;
          best_d2.swap(trial_d2);
        }
      }
    }
    chosen[pick] = 1;
    const auto x = points[pick];
    centroids.insert(centroids.end(), x.begin(), x.end());
    d2 = best_d2;
  }
  return centroids;
}

}  // namespace

// ------------------------------------------------------------------ PointSet

PointSet::PointSet(std::size_t dim, std::vector<double> values, std::vector<std::string> ids)
    : dim_(dim), values_(std::move(values)), ids_(std::move(ids)) {
  if (dim_ == 0 && !ids_.empty()) throw ArgumentError("point dimension must be positive");
  if (values_.size() != dim_ * ids_.size()) {
    throw DimensionError("point values do not match N*D", 0);
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw ArgumentError("point set contains a non-finite value");
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) throw IntegrityError("duplicate point id '" + id + "'");
  }
}

PointSet PointSet::from_rows(const std::vector<std::vector<double>>& rows) {
  std::vector<std::string> ids(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) ids[i] = std::to_string(i);
  return from_rows(rows, std::move(ids));
}

PointSet PointSet::from_rows(const std::vector<std::vector<double>>& rows,
                             std::vector<std::string> ids) {
  const std::size_t dim = rows.empty() ? 0 : rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    if (r.size() != dim) throw DimensionError("ragged point rows", 0);
    values.insert(values.end(), r.begin(), r.end());
  }
  return PointSet(dim, std::move(values), std::move(ids));
}

PointSet PointSet::subset(std::span<const std::size_t> indices) const {
  std::vector<double> values;
  values.reserve(indices.size() * dim_);
  std::vector<std::string> ids;
  ids.reserve(indices.size());
  for (auto i : indices) {
    const auto x = (*this)[i];
    values.insert(values.end(), x.begin(), x.end());
    ids.push_back(ids_[i]);
  }
  return PointSet(dim_, std::move(values), std::move(ids));
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

double within_cluster_ss(const PointSet& points, std::span<const Label> labels) {
  std::size_t k = 0;
  const auto compact = compact_labels(labels, k);
  std::vector<Label> as_labels(compact.begin(), compact.end());
  std::vector<double> centroids;
  std::vector<std::size_t> sizes;
  compute_means(points, as_labels, k, centroids, sizes);
  return inertia(points, as_labels, centroids);
}

// ------------------------------------------------------------------ k-means

KMeansRun kmeans_run(const PointSet& points, std::size_t k, std::uint64_t seed,
                     const KMeansOptions& options) {
  const std::size_t n = points.size();
  const std::size_t dim = points.dim();
  if (k == 0) throw ArgumentError("k must be >= 1");
  if (k > n) throw ArgumentError("k = " + std::to_string(k) + " exceeds N = " + std::to_string(n));

  std::mt19937_64 rng(seed);
  KMeansRun run;
  auto& part = run.partition;
  part.k = k;
  part.labels.assign(n, 0);
  std::vector<double> centroids = seed_plus_plus(points, k, options.seeding_trials, rng);
  std::vector<double> next;
  std::vector<double> point_cost(n);

  for (std::size_t iter = 0; iter < std::max<std::size_t>(options.max_iter, 1); ++iter) {
    // Assignment.
    for (std::size_t j = 0; j < n; ++j) {
      const auto x = points[j];
      Label best = 0;
      double best_d = squared_distance(x, {centroids.data(), dim});
      for (std::size_t c = 1; c < k; ++c) {
        const double d = squared_distance(x, {centroids.data() + c * dim, dim});
        if (d < best_d) {
          best_d = d;
          best = static_cast<Label>(c);
        }
      }
      part.labels[j] = best;
      point_cost[j] = best_d;
    }
    part.sizes.assign(k, 0);
    for (auto l : part.labels) ++part.sizes[l];

    // Repair: an empty cluster takes the worst-served point of a cluster
    // that can spare one.
    for (std::size_t c = 0; c < k; ++c) {
      if (part.sizes[c] != 0) continue;
      std::size_t worst = n;
      double worst_d = -1.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (part.sizes[part.labels[j]] > 1 && point_cost[j] > worst_d) {
          worst_d = point_cost[j];
          worst = j;
        }
      }
      --part.sizes[part.labels[worst]];
      part.labels[worst] = static_cast<Label>(c);
      ++part.sizes[c];
      point_cost[worst] = 0.0;
      const auto x = points[worst];
      std::copy(x.begin(), x.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
    }

    // Update.
    std::vector<std::size_t> sizes;
    compute_means(points, part.labels, k, next, sizes);
    double max_move = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      max_move = std::max(max_move, std::sqrt(squared_distance({centroids.data() + c * dim, dim},
                                                               {next.data() + c * dim, dim})));
    }
    centroids.swap(next);
    run.inertia_trace.push_back(inertia(points, part.labels, centroids));
    run.iterations = iter + 1;
    if (max_move < options.tol) {
      run.converged = true;
      break;
    }
  }
  part.centroids = std::move(centroids);
  return run;
}

Partition kmeans(const PointSet& points, std::size_t k, std::uint64_t seed,
                 const KMeansOptions& options) {
  return kmeans_run(points, k, seed, options).partition;
}

// ------------------------------------------------------------------ Hopkins

double hopkins(const PointSet& points, std::size_t m, std::uint64_t seed) {
  const std::size_t n = points.size();
  if (n < 4) throw ArgumentError("hopkins needs at least 4 points");
  if (m < 2 || m > n / 2) {
    throw ArgumentError("hopkins sample size m = " + std::to_string(m) + " must lie in [2, N/2]");
  }
  std::mt19937_64 rng(seed);
  const auto sample = sample_indices(n, m, rng);
  return hopkins(points, sample, rng());
}

double hopkins(const PointSet& points, std::span<const std::size_t> sample, std::uint64_t seed) {
  const std::size_t n = points.size();
  const std::size_t dim = points.dim();
  const std::size_t m = sample.size();
  if (n < 4) throw ArgumentError("hopkins needs at least 4 points");
  if (m < 2 || m > n / 2) {
    throw ArgumentError("hopkins sample size m = " + std::to_string(m) + " must lie in [2, N/2]");
  }
  for (auto i : sample) {
    if (i >= n) throw ArgumentError("hopkins sample index out of range");
  }
  std::mt19937_64 rng(seed);

  std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < n; ++j) {
    const auto x = points[j];
    for (std::size_t d = 0; d < dim; ++d) {
      lo[d] = std::min(lo[d], x[d]);
      hi[d] = std::max(hi[d], x[d]);
    }
  }

  // s_i: sampled real point to its nearest other point.
  long double sum_s = 0.0L;
  for (auto i : sample) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) best = std::min(best, squared_distance(points[i], points[j]));
    }
    sum_s += std::sqrt(best);
  }

  // t_i: uniform point in the bounding box to its nearest real point.
  long double sum_t = 0.0L;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> y(dim);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t d = 0; d < dim; ++d) y[d] = lo[d] + unit(rng) * (hi[d] - lo[d]);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) best = std::min(best, squared_distance(y, points[j]));
    sum_t += std::sqrt(best);
  }

  const long double denom = sum_s + sum_t;
  if (!(denom > 0.0L)) throw DegenerateGeometryError("hopkins: all points coincide");
  return static_cast<double>(sum_t / denom);
}

// ------------------------------------------------------------------ BIC

double bic_penalty(std::size_t k, std::size_t dim, std::size_t n) {
  return static_cast<double>(k) * static_cast<double>(dim + 1) * std::log(static_cast<double>(n)) / 2.0;
}

double bic(const PointSet& points, const Partition& partition, const BicOptions& options) {
  const std::size_t n = points.size();
  const std::size_t dim = points.dim();
  const std::size_t k = partition.k;
  if (partition.labels.size() != n) throw ArgumentError("partition does not match point set");
  if (n <= k) throw ArgumentError("BIC needs N > K");

  std::vector<double> centroids;
  std::vector<std::size_t> sizes;
  compute_means(points, partition.labels, k, centroids, sizes);

  long double spread = 0.0L;
  for (std::size_t j = 0; j < n; ++j) {
    const double d2 = squared_distance(points[j], {centroids.data() + partition.labels[j] * dim, dim});
    spread += (options.variant == BicVariant::paper && !options.squared_norm) ? std::sqrt(d2) : d2;
  }
  const double N = static_cast<double>(n);
  const double D = static_cast<double>(dim);
  double variance = static_cast<double>(spread) / (N - static_cast<double>(k));
  if (options.variant == BicVariant::xmeans) variance /= D;
  if (!(variance > 0.0)) throw DegenerateGeometryError("BIC: pooled variance is zero");

  const double log_2pi_var = std::log(2.0 * std::numbers::pi * variance);
  long double total = 0.0L;
  for (std::size_t i = 0; i < k; ++i) {
    const double ni = static_cast<double>(sizes[i]);
    if (ni == 0.0) continue;
    if (options.variant == BicVariant::paper) {
      total += ni * (std::log(ni / N) - ni * D * log_2pi_var / 2.0 - D * (ni - 1.0) / 2.0);
    } else {
      total += ni * std::log(ni) - ni * std::log(N) - ni * D / 2.0 * log_2pi_var - D * (ni - 1.0) / 2.0;
    }
  }
  return static_cast<double>(total) - bic_penalty(k, dim, n);
}

std::size_t pick_peak(std::span<const double> curve, KSelection strategy, double decisive_fraction) {
  if (curve.empty()) throw ArgumentError("empty curve");
  const auto global = static_cast<std::size_t>(std::max_element(curve.begin(), curve.end()) - curve.begin());
  if (strategy == KSelection::global_max || curve.size() < 2) return global;
  const auto [mn, mx] = std::minmax_element(curve.begin(), curve.end());
  const double margin = decisive_fraction * (*mx - *mn);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    bool decisive = true;
    if (i > 0) decisive = decisive && curve[i] - curve[i - 1] >= margin && curve[i] > curve[i - 1];
    if (i + 1 < curve.size()) decisive = decisive && curve[i] - curve[i + 1] >= margin && curve[i] > curve[i + 1];
    if (decisive) return i;
  }
  return global;
}

SelectKResult select_k(const PointSet& points, std::span<const std::size_t> k_values, std::size_t reps,
                       std::uint64_t seed, const SelectKOptions& options) {
  if (k_values.empty()) throw ArgumentError("select_k needs a non-empty k range");
  if (reps == 0) throw ArgumentError("select_k needs reps >= 1");
  for (auto k : k_values) {
    if (k == 0 || k >= points.size()) {
      throw ArgumentError("k = " + std::to_string(k) + " must lie in [1, N)");
    }
  }
  std::vector<double> values(k_values.size() * reps);
  detail::parallel_for(values.size(), options.threads, [&](std::size_t task) {
    const std::size_t ki = task / reps;
    const std::size_t rep = task % reps;
    const std::size_t k = k_values[ki];
    const auto part = kmeans(points, k, derive_seed(seed, "select_k", {k, rep}), options.kmeans);
    values[task] = bic(points, part, options.bic);
  });

  SelectKResult result;
  std::vector<double> curve(k_values.size());
  for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
    long double acc = 0.0L;
    for (std::size_t rep = 0; rep < reps; ++rep) acc += values[ki * reps + rep];
    curve[ki] = static_cast<double>(acc / static_cast<long double>(reps));
    result.curve.emplace_back(k_values[ki], curve[ki]);
  }
  result.k_star = k_values[pick_peak(curve, options.strategy, options.decisive_fraction)];
  return result;
}

// ------------------------------------------------------------------ CH

double calinski_harabasz(const PointSet& points, std::span<const Label> labels, ChVariant variant) {
  const std::size_t n = points.size();
  const std::size_t dim = points.dim();
  if (labels.size() != n) throw ArgumentError("labels do not match point set");
  std::size_t k = 0;
  const auto compact = compact_labels(labels, k);
  if (k < 2) throw ArgumentError("Calinski-Harabasz needs at least 2 clusters");
  if (n <= k) throw ArgumentError("Calinski-Harabasz needs N > K");
  std::vector<Label> as_labels(compact.begin(), compact.end());

  std::vector<double> centroids;
  std::vector<std::size_t> sizes;
  compute_means(points, as_labels, k, centroids, sizes);

  std::vector<long double> grand(dim, 0.0L);
  for (std::size_t j = 0; j < n; ++j) {
    const auto x = points[j];
    for (std::size_t d = 0; d < dim; ++d) grand[d] += x[d];
  }
  std::vector<double> mean(dim);
  for (std::size_t d = 0; d < dim; ++d) mean[d] = static_cast<double>(grand[d] / n);

  const double ssw = inertia(points, as_labels, centroids);
  long double ssb = 0.0L;
  for (std::size_t i = 0; i < k; ++i) {
    const double d2 = squared_distance({centroids.data() + i * dim, dim}, mean);
    ssb += variant == ChVariant::size_weighted ? d2 * static_cast<double>(sizes[i]) : d2;
  }
  if (!(ssw > 0.0)) throw DegenerateGeometryError("Calinski-Harabasz: within-cluster SS is zero");
  return static_cast<double>(ssb) / ssw * (static_cast<double>(n - k) / static_cast<double>(k - 1));
}

// ------------------------------------------------------------------ external

ContingencyTable contingency_table(std::span<const Label> p, std::span<const Label> q) {
  if (p.size() != q.size()) throw AlignmentError("partitions cover different numbers of points");
  ContingencyTable t;
  const auto rp = compact_labels(p, t.rows);
  const auto rq = compact_labels(q, t.cols);
  t.counts.assign(t.rows * t.cols, 0);
  t.row_sums.assign(t.rows, 0);
  t.col_sums.assign(t.cols, 0);
  for (std::size_t j = 0; j < p.size(); ++j) {
    ++t.counts[rp[j] * t.cols + rq[j]];
    ++t.row_sums[rp[j]];
    ++t.col_sums[rq[j]];
  }
  t.total = p.size();
  return t;
}

ContingencyTable contingency_table(const Labeling& p, const Labeling& q) {
  if (p.ids.size() != p.labels.size() || q.ids.size() != q.labels.size()) {
    throw ArgumentError("labeling ids and labels differ in length");
  }
  if (p.ids.size() != q.ids.size()) throw AlignmentError("partitions cover different id sets");
  std::unordered_map<std::string_view, std::size_t> where;
  for (std::size_t j = 0; j < q.ids.size(); ++j) {
    if (!where.emplace(q.ids[j], j).second) throw AlignmentError("duplicate id '" + q.ids[j] + "'");
  }
  std::vector<Label> aligned(p.ids.size());
  std::unordered_set<std::string_view> seen;
  for (std::size_t j = 0; j < p.ids.size(); ++j) {
    auto it = where.find(p.ids[j]);
    if (it == where.end()) throw AlignmentError("id '" + p.ids[j] + "' missing from second partition");
    if (!seen.insert(p.ids[j]).second) throw AlignmentError("duplicate id '" + p.ids[j] + "'");
    aligned[j] = q.labels[it->second];
  }
  return contingency_table(p.labels, aligned);
}

double adjusted_rand_index(const ContingencyTable& t) {
  if (t.total < 2) throw ArgumentError("ARI needs at least 2 points");
  std::uint64_t pairs_ij = 0;
  for (auto c : t.counts) pairs_ij += choose2(c);
  std::uint64_t pairs_p = 0;
  for (auto c : t.row_sums) pairs_p += choose2(c);
  std::uint64_t pairs_q = 0;
  for (auto c : t.col_sums) pairs_q += choose2(c);
  const long double all = static_cast<long double>(choose2(t.total));
  const long double expected = static_cast<long double>(pairs_p) * pairs_q / all;
  const long double max_index = 0.5L * (static_cast<long double>(pairs_p) + pairs_q);
  const long double denom = max_index - expected;
  if (denom == 0.0L) {
    // Only reachable when both sides are all-singletons or both one cluster.
    std::size_t nonzero = 0;
    for (auto c : t.counts) nonzero += c != 0;
    if (nonzero == t.rows && nonzero == t.cols) return 1.0;
    throw DegenerateGeometryError("ARI denominator is zero for non-identical partitions");
  }
  return static_cast<double>((static_cast<long double>(pairs_ij) - expected) / denom);
}

double adjusted_rand_index(std::span<const Label> p, std::span<const Label> q) {
  return adjusted_rand_index(contingency_table(p, q));
}

double adjusted_rand_index(const Labeling& p, const Labeling& q) {
  return adjusted_rand_index(contingency_table(p, q));
}

// ------------------------------------------------------------------ diversity

double mean_pairwise_distance(const PointSet& points) {
  const std::size_t n = points.size();
  if (n < 2) throw ArgumentError("mean pairwise distance needs at least 2 vectors");
  long double total = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) total += std::sqrt(squared_distance(points[i], points[j]));
  }
  return static_cast<double>(total / static_cast<long double>(choose2(n)));
}

double mean_pairwise_distance(std::span<const std::vector<double>> vectors) {
  const std::size_t n = vectors.size();
  if (n < 2) throw ArgumentError("mean pairwise distance needs at least 2 vectors");
  const std::size_t dim = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != dim) throw DimensionError("vectors differ in dimension", 0);
  }
  long double total = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) total += std::sqrt(squared_distance(vectors[i], vectors[j]));
  }
  return static_cast<double>(total / static_cast<long double>(choose2(n)));
}

}  // namespace echoaudit
