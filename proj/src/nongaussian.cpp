#include <cmath>
#include <random>

#include "twqr/error.hpp"
#include "twqr/montecarlo.hpp"
#include "twqr/parallel.hpp"
#include "twqr/qr.hpp"
#include "twqr/rng.hpp"
#include "twqr/stats.hpp"

namespace twqr {

namespace {

constexpr std::uint32_t kRowFactor = 16;
constexpr std::uint32_t kColFactor = 17;
constexpr std::uint32_t kRowSign = 18;
constexpr std::uint32_t kColSign = 19;
constexpr std::uint32_t kCellMagnitude = 20;
constexpr std::uint32_t kCalibration = 21;
constexpr std::uint32_t kReference = 22;
constexpr std::uint32_t kAuxReplication = 0xFFFFFFFEu;
constexpr int kCalibrationDraws = 1'000'000;

void check_design(int G, int H, double c) {
  if (G < 2 || H < 2) throw Error(ErrorCode::InvalidConfig, "G and H must be at least 2");
  if (!(c >= 0.0)) throw Error(ErrorCode::InvalidConfig, "c must be nonnegative");
  if (c > std::sqrt(static_cast<double>(H))) {
    throw Error(ErrorCode::InvalidConfig, "c must not exceed sqrt(H) so that P(V^e = 1) <= 1");
  }
}

// Draws kappa-free Z_U (Z_V + c) products from one stream.
std::vector<double> product_normals(std::uint64_t seed, std::uint32_t family, int count, double c) {
  PhiloxEngine engine(seed, kAuxReplication, stream_id(family));
  std::normal_distribution<double> dist;
  std::vector<double> out(static_cast<std::size_t>(count));
  for (auto& value : out) {
    const double zu = dist(engine);
    const double zv = dist(engine);
    value = zu * (zv + c);
  }
  return out;
}

}  // namespace

PanelArray generate_nongaussian(int G, int H, double c, std::uint64_t seed, int rep) {
  check_design(G, H, c);
  const auto r = static_cast<std::uint32_t>(rep);
  std::normal_distribution<double> normal01;

  PhiloxEngine row_engine(seed, r, stream_id(kRowFactor));
  Vector u(G);
  for (int g = 0; g < G; ++g) u(g) = normal01(row_engine);

  PhiloxEngine col_engine(seed, r, stream_id(kColFactor));
  std::normal_distribution<double> shifted(1.0, 1.0);
  Vector v(H);
  for (int h = 0; h < H; ++h) v(h) = shifted(col_engine);

  PhiloxEngine row_sign_engine(seed, r, stream_id(kRowSign));
  std::bernoulli_distribution fair(0.5);
  Vector row_sign(G);
  for (int g = 0; g < G; ++g) row_sign(g) = fair(row_sign_engine) ? 1.0 : -1.0;

  PhiloxEngine col_sign_engine(seed, r, stream_id(kColSign));
  std::bernoulli_distribution tilted(0.5 + c / (2.0 * std::sqrt(static_cast<double>(H))));
  Vector col_sign(H);
  for (int h = 0; h < H; ++h) col_sign(h) = tilted(col_sign_engine) ? 1.0 : -1.0;

  PhiloxEngine cell_engine(seed, r, stream_id(kCellMagnitude));
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  const Eigen::Index n = static_cast<Eigen::Index>(G) * H;
  Matrix x(n, 1);
  Vector y(n);
  std::vector<int> gi(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
  Eigen::Index cell = 0;
  for (int g = 0; g < G; ++g) {
    for (int h = 0; h < H; ++h, ++cell) {
      const double regressor = u(g) * v(h);
      const double error = row_sign(g) * col_sign(h) * std::abs(unif(cell_engine));
      x(cell, 0) = regressor;
      y(cell) = regressor + error;
      gi[static_cast<std::size_t>(cell)] = g;
      hi[static_cast<std::size_t>(cell)] = h;
    }
  }
  return PanelArray(G, H, std::move(gi), std::move(hi), std::move(y), std::move(x), {"x"});
}

NonGaussianResult nongaussian_demo(int G, int H, double c, int reps, std::uint64_t seed, unsigned threads) {
  check_design(G, H, c);
  if (reps < 500) throw Error(ErrorCode::InvalidConfig, "reps must be at least 500");

  const double root_n = std::sqrt(static_cast<double>(G) * static_cast<double>(H));
  std::vector<double> draws(static_cast<std::size_t>(reps), 0.0);
  std::vector<char> ok(static_cast<std::size_t>(reps), 0);
  parallel_for(draws.size(), threads, [&](std::size_t rep) {
    try {
      const PanelArray panel = generate_nongaussian(G, H, c, seed, static_cast<int>(rep));
      const QuantileFit fit = fit_qr(panel, 0.5);
      if (!fit.solver.converged) return;
      draws[rep] = root_n * (fit.beta_hat(0) - 1.0);
      ok[rep] = 1;
    } catch (const Error&) {
    }
  });

  NonGaussianResult out;
  for (std::size_t rep = 0; rep < draws.size(); ++rep) {
    if (ok[rep]) {
      out.empirical.push_back(draws[rep]);
    } else {
      ++out.failures;
    }
  }
  if (out.empirical.size() < 2) throw Error(ErrorCode::InvalidConfig, "too few successful replications");

  const std::vector<double> calibration = product_normals(seed, kCalibration, kCalibrationDraws, c);
  out.kappa = stats::iqr(out.empirical) / stats::iqr(calibration);
  out.reference = product_normals(seed, kReference, static_cast<int>(out.empirical.size()), c);
  for (double& value : out.reference) value *= out.kappa;

  NonGaussianSummary& s = out.summary;
  s.mean = stats::mean(out.empirical);
  s.stddev = stats::stddev(out.empirical);
  s.kurtosis = stats::kurtosis(out.empirical);
  s.excess_kurtosis = s.kurtosis - 3.0;
  s.ks_vs_fitted_normal = stats::ks_vs_normal(out.empirical, s.mean, s.stddev);
  s.ks_vs_reference = stats::ks_two_sample(out.empirical, out.reference);
  return out;
}

}  // namespace twqr
