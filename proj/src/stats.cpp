#include "twqr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "twqr/normal.hpp"

namespace twqr::stats {

double lower_median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty sample");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

double mad(std::span<const double> values) {
  const double center = lower_median({values.begin(), values.end()});
  std::vector<double> dev;
  dev.reserve(values.size());
  for (double v : values) dev.push_back(std::abs(v - center));
  return lower_median(std::move(dev));
}

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of empty sample");
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

double kurtosis(std::span<const double> values) {
  const double m = mean(values);
  double m2 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double c2 = (v - m) * (v - m);
    m2 += c2;
    m4 += c2 * c2;
  }
  const auto n = static_cast<double>(values.size());
  m2 /= n;
  m4 /= n;
  return m4 / (m2 * m2);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double iqr(std::span<const double> values) {
  std::vector<double> copy(values.begin(), values.end());
  return quantile(copy, 0.75) - quantile(copy, 0.25);
}

double ks_vs_normal(std::span<const double> sample, double mu, double sigma) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal::cdf((sorted[i] - mu) / sigma);
    worst = std::max({worst, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return worst;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const auto na = static_cast<double>(sa.size());
  const auto nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double worst = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return worst;
}

}  // namespace twqr::stats
