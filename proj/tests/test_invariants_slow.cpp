#include <doctest.h>

#include <cmath>
#include <random>

#include "twqr/montecarlo.hpp"
#include "twqr/normal.hpp"
#include "twqr/parallel.hpp"
#include "twqr/qr.hpp"

using namespace twqr;

namespace {

unsigned workers() { return resolve_threads(std::nullopt); }

// Direct covariance of a single cell's score at the true coefficients,
// drawing fresh row, column and cell latents every time.
Matrix direct_score_variance(const MonteCarloConfig& c, int draws) {
  std::mt19937_64 rng(c.seed + 99);
  std::normal_distribution<double> z;
  const auto& w = c.weights;
  const Vector beta = true_coefficients(c);
  Vector sum = Vector::Zero(c.d);
  Matrix outer = Matrix::Zero(c.d, c.d);
  Vector x(c.d);
  for (int i = 0; i < draws; ++i) {
    x(0) = 1.0;
    for (int k = 1; k < c.d; ++k) x(k) = w.wUx * z(rng) + w.wVx * z(rng) + w.wWx * z(rng);
    const double e = w.wUe * z(rng) + w.wVe * z(rng) + w.wWe * z(rng);
    const double y = x.tail(c.d - 1).sum() + 1.0 + e;
    const Vector psi = x * (c.tau - (y <= x.dot(beta) ? 1.0 : 0.0));
    sum += psi;
    outer.noalias() += psi * psi.transpose();
  }
  const Vector mean = sum / draws;
  return outer / draws - mean * mean.transpose();
}

}  // namespace

TEST_CASE("the population score decomposition adds up") {
  MonteCarloConfig c;
  c.d = 3;
  c.tau = 0.4;
  const VarianceOracle o = oracle_variance_components(c, c.tau, 100000);
  const Matrix total = o.sigma_I2 + o.sigma_II2 + o.sigma_III2 + o.sigma_IV2;
  const Matrix direct = direct_score_variance(c, 400000);
  CHECK((total - direct).norm() / direct.norm() < 0.05);

  SUBCASE("row and column parts agree under symmetric loadings") {
    for (int j = 0; j < c.d; ++j) {
      CHECK(std::abs(o.sigma_I2(j, j) - o.sigma_II2(j, j)) < 0.05 * std::max(o.sigma_I2(j, j), o.sigma_II2(j, j)));
    }
  }
  SUBCASE("the intercept's row part matches its closed form") {
    // E[psi_0 | U] = tau - Phi((q - wUe U) / sqrt(wVe^2 + wWe^2)) at tau = 0.4, unit weights.
    const double q = std::sqrt(3.0) * normal::quantile(c.tau);
    double m1 = 0, m2 = 0;
    const int nodes = 20000;
    for (int k = 0; k < nodes; ++k) {
      const double u = normal::quantile((k + 0.5) / nodes);
      const double m = c.tau - normal::cdf((q - u) / std::sqrt(2.0));
      m1 += m / nodes;
      m2 += m * m / nodes;
    }
    CHECK(o.sigma_I2(0, 0) == doctest::Approx(m2 - m1 * m1).epsilon(0.02));
  }
}

TEST_CASE("t-tests with oracle meat and true bread have nominal size") {
  MonteCarloConfig c;
  c.reps = 2000;
  c.seed = 21;
  const VarianceOracle o = oracle_variance_components(c, c.tau, 100000);
  const Matrix d_inv = true_jacobian(c).inverse();
  const Matrix sigma = d_inv * o.omega_GH * d_inv;
  const int j = c.d - 1;
  const double se = std::sqrt(sigma(j, j));
  std::vector<double> estimates(static_cast<std::size_t>(c.reps), 0.0);
  parallel_for(estimates.size(), workers(), [&](std::size_t rep) {
    estimates[rep] = fit_qr(generate_dgp(c, static_cast<int>(rep)), c.tau).beta_hat(j);
  });
  double rate = 0, var = 0;
  for (double b : estimates) {
    rate += std::abs(b - c.null_value) / se > normal::quantile(0.975);
    var += (b - c.null_value) * (b - c.null_value);
  }
  rate /= c.reps;
  var /= c.reps;
  MESSAGE("oracle rejection rate " << rate << ", sampling variance / oracle variance " << var / (se * se));
  CHECK(rate >= 0.035);
  CHECK(rate <= 0.065);
  CHECK(var / (se * se) >= 0.8);
  CHECK(var / (se * se) <= 1.15);
}

TEST_CASE("transposing the design swaps the one-way estimators") {
  MonteCarloConfig rows;
  rows.G = 40;
  rows.H = 30;
  rows.d = 4;
  rows.reps = 1000;
  rows.weights = {1, 0, 1, 1, 0, 1};
  MonteCarloConfig cols = rows;
  cols.G = 30;
  cols.H = 40;
  cols.weights = {0, 1, 1, 0, 1, 1};
  cols.seed = 2;
  const RejectionReport a = rejection_experiment(rows, workers());
  const RejectionReport b = rejection_experiment(cols, workers());
  auto freq = [](const RejectionReport& r, CrveKind k) {
    for (const MethodRejection& m : r.methods) {
      if (m.kind == k) return m;
    }
    FAIL("missing method");
    return MethodRejection{};
  };
  const std::pair<CrveKind, CrveKind> pairs[] = {{CrveKind::CG, CrveKind::CH},
                                                 {CrveKind::CH, CrveKind::CG},
                                                 {CrveKind::CTW, CrveKind::CTW},
                                                 {CrveKind::CI, CrveKind::CI}};
  for (const auto& [left, right] : pairs) {
    const MethodRejection x = freq(a, left), y = freq(b, right);
    const double se = std::sqrt(x.mc_se * x.mc_se + y.mc_se * y.mc_se);
    CHECK(std::abs(x.frequency - y.frequency) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("non-Gaussian limit matches the scaled product of normals") {
  const NonGaussianResult r = nongaussian_demo(60, 60, 0.0, 1000, 4, workers());
  CHECK(r.failures == 0);
  CHECK(r.summary.kurtosis > 5.0);
  // Two samples of 1000 from one law: KS above 0.08 has probability below 0.5%.
  CHECK(r.summary.ks_vs_reference < 0.08);
}
