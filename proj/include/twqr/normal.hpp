#pragma once

#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

namespace twqr::normal {

inline double pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

inline double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Upper tail 1 - Phi(x), accurate for large x.
inline double sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

inline double quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

}  // namespace twqr::normal
