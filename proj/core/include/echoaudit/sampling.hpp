#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace echoaudit {

/// Uniform sample of `target` members without replacement, returned in
/// ascending order. Throws ArgumentError if target exceeds the group.
std::vector<std::string> resize_sample(std::span<const std::string> group, std::size_t target,
                                       std::uint64_t seed);

/// floor(fraction * |group|) members, uniform without replacement.
std::vector<std::string> p_sample(std::span<const std::string> group, double fraction,
                                  std::uint64_t seed);

/// floor(fraction * n), guarded against representation error (0.29 * 100 -> 29).
std::size_t p_sample_size(std::size_t n, double fraction);

}  // namespace echoaudit
