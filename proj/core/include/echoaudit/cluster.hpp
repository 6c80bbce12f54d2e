#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace echoaudit {

/// N finite points of dimension D with unique ids, stored row-major.
class PointSet {
 public:
  PointSet() = default;
  PointSet(std::size_t dim, std::vector<double> values, std::vector<std::string> ids);
  static PointSet from_rows(const std::vector<std::vector<double>>& rows);
  static PointSet from_rows(const std::vector<std::vector<double>>& rows,
                            std::vector<std::string> ids);

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> operator[](std::size_t i) const noexcept {
    return {values_.data() + i * dim_, dim_};
  }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Points at `indices`, in that order.
  PointSet subset(std::span<const std::size_t> indices) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
  std::vector<std::string> ids_;
};

using Label = std::uint32_t;

struct Partition {
  std::size_t k = 0;
  std::vector<Label> labels;     // N entries in [0, k)
  std::vector<double> centroids; // k * D, row-major
  std::vector<std::size_t> sizes;

  std::span<const double> centroid(std::size_t i, std::size_t dim) const noexcept {
    return {centroids.data() + i * dim, dim};
  }
};

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

/// Total within-cluster sum of squares of `labels` around their own means.
double within_cluster_ss(const PointSet& points, std::span<const Label> labels);

// ---------------------------------------------------------------- k-means

struct KMeansOptions {
  std::size_t max_iter = 300;
  double tol = 1e-6;  // stop when no centroid moves farther than this
  /// Candidates drawn per seeding step; 0 picks 2 + floor(ln k), 1 is plain k-means++.
  std::size_t seeding_trials = 0;
};

struct KMeansRun {
  Partition partition;
  std::size_t iterations = 0;
  bool converged = false;
  /// Within-cluster SS after each Lloyd step (assignment, repair, update).
  std::vector<double> inertia_trace;
};

/// Greedy k-means++ seeding followed by Lloyd iterations. Nearest-centroid ties go to
/// the lowest index; an emptied cluster takes the point farthest from its
/// centroid. Deterministic for a fixed seed.
KMeansRun kmeans_run(const PointSet& points, std::size_t k, std::uint64_t seed,
                     const KMeansOptions& options = {});
Partition kmeans(const PointSet& points, std::size_t k, std::uint64_t seed,
                 const KMeansOptions& options = {});

// ---------------------------------------------------------------- Hopkins

/// Hopkins statistic with m sampled points and m uniform reference points
/// drawn in the bounding box of the data. Values near 1 mean clustered data,
/// near 0.5 spatially random. Requires N >= 4 and 2 <= m <= N/2.
double hopkins(const PointSet& points, std::size_t m, std::uint64_t seed);
/// Same statistic with the m real sample points given by index; `seed` only
/// drives the uniform reference points.
double hopkins(const PointSet& points, std::span<const std::size_t> sample, std::uint64_t seed);

// ---------------------------------------------------------------- BIC

enum class BicVariant {
  paper,   // the partition-clustering form with cluster-size weighted terms
  xmeans,  // spherical-Gaussian BIC with per-dimension pooled variance
};

struct BicOptions {
  BicVariant variant = BicVariant::xmeans;
  /// For `paper`: pool squared distances (true) or plain distances (false).
  bool squared_norm = true;
};

/// K(D+1)log(N)/2, the parameter-count penalty shared by both variants.
double bic_penalty(std::size_t k, std::size_t dim, std::size_t n);

/// Higher is better. Throws DegenerateGeometryError when the pooled variance is 0.
double bic(const PointSet& points, const Partition& partition, const BicOptions& options = {});

enum class KSelection { global_max, first_decisive_local_max };

struct SelectKOptions {
  BicOptions bic;
  KSelection strategy = KSelection::global_max;
  double decisive_fraction = 0.01;  // of the curve range
  KMeansOptions kmeans;
  unsigned threads = 1;
};

struct SelectKResult {
  std::size_t k_star = 0;
  std::vector<std::pair<std::size_t, double>> curve;  // (k, mean BIC)
};

/// Picks the peak of a curve by the given strategy; returns an index.
std::size_t pick_peak(std::span<const double> curve, KSelection strategy,
                      double decisive_fraction = 0.01);

SelectKResult select_k(const PointSet& points, std::span<const std::size_t> k_values,
                       std::size_t reps, std::uint64_t seed, const SelectKOptions& options = {});

// ---------------------------------------------------------------- CH

enum class ChVariant {
  unweighted,    // SSB = sum_i ||c_i - mean||^2
  size_weighted  // SSB = sum_i n_i ||c_i - mean||^2
};

/// Calinski-Harabasz index of `labels` on `points`; centroids come from the
/// supplied labels. Needs >= 2 non-empty clusters and N > K.
double calinski_harabasz(const PointSet& points, std::span<const Label> labels,
                         ChVariant variant = ChVariant::unweighted);

// ---------------------------------------------------------------- external

struct ContingencyTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint64_t> counts;  // rows * cols, row-major
  std::vector<std::uint64_t> row_sums;
  std::vector<std::uint64_t> col_sums;
  std::uint64_t total = 0;

  std::uint64_t at(std::size_t i, std::size_t j) const noexcept { return counts[i * cols + j]; }
};

/// Cluster labels keyed by point id.
struct Labeling {
  std::vector<std::string> ids;
  std::vector<Label> labels;
};

/// Rows and columns follow the sorted distinct labels of each side.
ContingencyTable contingency_table(std::span<const Label> p, std::span<const Label> q);
/// Aligns by id; throws AlignmentError if the id sets differ.
ContingencyTable contingency_table(const Labeling& p, const Labeling& q);

double adjusted_rand_index(const ContingencyTable& table);
double adjusted_rand_index(std::span<const Label> p, std::span<const Label> q);
double adjusted_rand_index(const Labeling& p, const Labeling& q);

// ---------------------------------------------------------------- diversity

/// Mean Euclidean distance over all unordered pairs.
double mean_pairwise_distance(const PointSet& points);
double mean_pairwise_distance(std::span<const std::vector<double>> vectors);

}  // namespace echoaudit
