#pragma once

#include <span>

namespace echoaudit {

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;  // two-sided
};

/// Two-sided Welch (unequal-variance) t-test with Welch-Satterthwaite degrees
/// of freedom. Both samples need at least 2 values. When both variances are
/// zero the p-value is 1 for equal means and 0 otherwise.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> values);
/// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> values);

}  // namespace echoaudit
