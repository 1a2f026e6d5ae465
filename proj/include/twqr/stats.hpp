#pragma once

#include <span>
#include <vector>

namespace twqr::stats {

/// Lower median: element of rank floor((n-1)/2) in sorted order.
double lower_median(std::vector<double> values);

/// Median absolute deviation about the lower median (unscaled).
double mad(std::span<const double> values);

double mean(std::span<const double> values);

/// Population-normalized standard deviation.
double stddev(std::span<const double> values);

/// m4 / m2^2 (a normal sample gives about 3).
double kurtosis(std::span<const double> values);

/// Linear-interpolation sample quantile (type 7).
double quantile(std::vector<double> values, double p);

double iqr(std::span<const double> values);

/// sup_x |F_n(x) - Phi((x - mu) / sigma)|.
double ks_vs_normal(std::span<const double> sample, double mu, double sigma);

/// sup_x |F_a(x) - F_b(x)|.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

}  // namespace twqr::stats
