#include "echoaudit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "echoaudit/error.hpp"

namespace echoaudit {

double mean(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("mean of an empty sample");
  long double s = 0.0L;
  for (double v : values) s += v;
  return static_cast<double>(s / static_cast<long double>(values.size()));
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw ArgumentError("variance needs at least 2 values");
  const double m = mean(values);
  long double s = 0.0L;
  for (double v : values) s += (v - m) * (v - m);
  return static_cast<double>(s / static_cast<long double>(values.size() - 1));
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ArgumentError("Welch t-test needs at least 2 values per sample");
  for (auto s : {a, b}) {
    if (std::any_of(s.begin(), s.end(), [](double v) { return !std::isfinite(v); })) {
      throw ArgumentError("Welch t-test sample contains a non-finite value");
    }
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a);
  const double mb = mean(b);
  const double va = sample_variance(a) / na;
  const double vb = sample_variance(b) / nb;

  WelchResult r;
  if (va == 0.0 && vb == 0.0) {
    if (ma == mb) return r;
    r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.df = na + nb - 2.0;
    r.p_value = 0.0;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const boost::math::students_t_distribution<double> dist(r.df);
  r.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t))), 0.0, 1.0);
  return r;
}

}  // namespace echoaudit
