#include "echoaudit/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "echoaudit/error.hpp"

namespace echoaudit {

std::vector<std::string> resize_sample(std::span<const std::string> group, std::size_t target,
                                       std::uint64_t seed) {
  if (target > group.size()) {
    throw ArgumentError("cannot resize a group of " + std::to_string(group.size()) + " to " +
                        std::to_string(target));
  }
  std::vector<std::string> pool(group.begin(), group.end());
  std::sort(pool.begin(), pool.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < target; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(target);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::size_t p_sample_size(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

std::vector<std::string> p_sample(std::span<const std::string> group, double fraction,
                                  std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("p-sample fraction must lie in (0, 1]");
  return resize_sample(group, std::min(group.size(), p_sample_size(group.size(), fraction)), seed);
}

}  // namespace echoaudit
