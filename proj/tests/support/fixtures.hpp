#pragma once

// Shared fixture builders for the test binaries.

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "echoaudit/cluster.hpp"
#include "echoaudit/logmodel.hpp"

namespace fixtures {

inline std::vector<std::string> numbered_ids(std::size_t n, const std::string& prefix = "p") {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

inline echoaudit::PointSet uniform_points(std::size_t n, std::size_t dim, std::uint64_t seed,
                                          double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n * dim);
  for (auto& x : v) x = u(rng);
  return echoaudit::PointSet(dim, std::move(v), numbered_ids(n));
}

/// `blobs` Gaussian clusters of equal size; centres are `spacing` apart along
/// distinct axes (or a scaled grid when blobs > dim). Returns points and truth.
struct Blobs {
  echoaudit::PointSet points;
  std::vector<echoaudit::Label> truth;
};

inline Blobs gaussian_blobs(std::size_t blobs, std::size_t per_blob, std::size_t dim, double sigma,
                            double spacing, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Blobs out;
  std::vector<double> v;
  for (std::size_t b = 0; b < blobs; ++b) {
    std::vector<double> centre(dim, 0.0);
    centre[b % dim] = spacing * static_cast<double>(1 + b / dim);
    for (std::size_t i = 0; i < per_blob; ++i) {
      for (std::size_t d = 0; d < dim; ++d) v.push_back(centre[d] + normal(rng));
      out.truth.push_back(static_cast<echoaudit::Label>(b));
    }
  }
  out.points = echoaudit::PointSet(dim, std::move(v), numbered_ids(blobs * per_blob));
  return out;
}

inline std::vector<echoaudit::Label> random_labels(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::uniform_int_distribution<echoaudit::Label> u(0, static_cast<echoaudit::Label>(k - 1));
  std::vector<echoaudit::Label> out(n);
  for (auto& l : out) l = u(rng);
  return out;
}

inline echoaudit::InteractionRecord browse(std::int64_t ts, std::string pv, std::string user, std::string item,
                                           std::uint32_t pos, bool clicked) {
  echoaudit::InteractionRecord r;
  r.kind = echoaudit::InteractionKind::browse;
  r.timestamp = ts;
  r.pv_id = std::move(pv);
  r.user_id = std::move(user);
  r.item_id = std::move(item);
  r.position = pos;
  r.clicked = clicked;
  return r;
}

inline echoaudit::InteractionRecord action(echoaudit::InteractionKind kind, std::int64_t ts, std::string user,
                                           std::string item, double price = 1.0, std::string pv = "pv") {
  echoaudit::InteractionRecord r;
  r.kind = kind;
  r.timestamp = ts;
  r.pv_id = std::move(pv);
  r.user_id = std::move(user);
  r.item_id = std::move(item);
  r.price = price;
  return r;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("echo_audit_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
