#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "twqr/error.hpp"
#include "twqr/jacobian.hpp"
#include "twqr/montecarlo.hpp"
#include "twqr/qr.hpp"

using namespace twqr;

namespace {

// High-precision reference values (50-digit evaluation of the normal quantile and density).
constexpr double kAlphaHalf = 0.39894228040143267794;
constexpr double kAlpha90 = 0.013911978122784351586;
constexpr double kAlpha10 = 0.91355262627696201264;
constexpr double kAlpha25 = 0.89101879226795206918;
constexpr double kAlpha75 = 0.033670627756470872386;

PanelArray cells(const Matrix& x) {
  const int n = static_cast<int>(x.rows());
  std::vector<int> g(static_cast<std::size_t>(n)), h(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = i;
  return PanelArray(n, 1, g, h, Vector::Zero(n), x);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("alpha matches the reference values") {
  CHECK(alpha(0.5) == doctest::Approx(kAlphaHalf).epsilon(1e-14));
  CHECK(alpha(0.9) == doctest::Approx(kAlpha90).epsilon(1e-12));
  CHECK(alpha(0.1) == doctest::Approx(kAlpha10).epsilon(1e-12));
  CHECK(alpha(0.25) == doctest::Approx(kAlpha25).epsilon(1e-12));
  CHECK(alpha(0.75) == doctest::Approx(kAlpha75).epsilon(1e-12));
  CHECK(code_of([] { alpha(0.0); }) == ErrorCode::InvalidTau);
}

TEST_CASE("vech is the column-major lower triangle") {
  Matrix m(3, 3);
  m << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  const Vector v = vech(m);
  REQUIRE(v.size() == 6);
  CHECK(v(0) == 1);
  CHECK(v(1) == 4);
  CHECK(v(2) == 7);
  CHECK(v(3) == 5);
  CHECK(v(4) == 8);
  CHECK(v(5) == 9);
}

TEST_CASE("identical regressors reduce the rule of thumb to sigma n^-1/5 (4.5/alpha)^1/5") {
  const int n = 7;
  Matrix x = Matrix::Ones(n, 1);
  x *= 2.0;
  Vector r(n);
  r << -3, -1, -0.5, 0, 0.5, 1, 3;
  const BandwidthDiagnostics bw = rule_of_thumb_bandwidth(cells(x), r, 0.5);
  CHECK(bw.sigma_hat == doctest::Approx(1.0 / 0.6745).epsilon(1e-14));
  const double expected = bw.sigma_hat * std::pow(n, -0.2) * std::pow(4.5 / kAlphaHalf, 0.2);
  CHECK(bw.ell == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("MAD arithmetic on {-1, 0, 1}") {
  Vector r(3);
  r << -1, 0, 1;
  const BandwidthDiagnostics bw = rule_of_thumb_bandwidth(cells(Matrix::Ones(3, 1)), r, 0.5);
  CHECK(bw.sigma_hat == doctest::Approx(1.4826).epsilon(1e-4));
}

TEST_CASE("rule of thumb matches an explicit re-evaluation on a DGP panel") {
  MonteCarloConfig c;
  const PanelArray p = generate_dgp(c, 2);
  const QuantileFit fit = fit_qr(p, 0.5);
  const BandwidthDiagnostics bw = rule_of_thumb_bandwidth(p, fit.residuals, 0.5);

  // Explicit Q_gh vectors and a full sort for the medians.
  const int n = p.size();
  const int d = p.dim();
  std::vector<double> r(fit.residuals.data(), fit.residuals.data() + n);
  std::sort(r.begin(), r.end());
  const double med = r[static_cast<std::size_t>((n - 1) / 2)];
  std::vector<double> dev(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) dev[i] = std::abs(r[i] - med);
  std::sort(dev.begin(), dev.end());
  const double sigma = dev[static_cast<std::size_t>((n - 1) / 2)] / 0.6745;

  Vector q_sum = Vector::Zero(d * (d + 1) / 2);
  double q_norm = 0;
  for (int i = 0; i < n; ++i) {
    const Vector xi = p.x().row(i).transpose();
    const Vector q = vech(xi * xi.transpose());
    q_sum += q;
    q_norm += q.squaredNorm();
  }
  const double ratio = (4.5 * q_norm / n) / (kAlphaHalf * (q_sum / n).squaredNorm());
  const double ell = sigma * std::pow(static_cast<double>(n), -0.2) * std::pow(ratio, 0.2);
  CHECK(bw.sigma_hat == doctest::Approx(sigma).epsilon(1e-12));
  CHECK(bw.ell == doctest::Approx(ell).epsilon(1e-12));

  SUBCASE("scale equivariance") {
    const double k = 2.5;
    const BandwidthDiagnostics scaled = rule_of_thumb_bandwidth(p, k * fit.residuals, 0.5);
    CHECK(scaled.sigma_hat == doctest::Approx(k * bw.sigma_hat).epsilon(1e-13));
    CHECK(scaled.ell == doctest::Approx(k * bw.ell).epsilon(1e-13));
  }
  SUBCASE("determinism") {
    CHECK(rule_of_thumb_bandwidth(p, fit.residuals, 0.5).ell == bw.ell);
  }
}

TEST_CASE("rule of thumb errors") {
  CHECK(code_of([] { rule_of_thumb_bandwidth(cells(Matrix::Ones(3, 1)), Vector::Zero(3), 0.5); }) ==
        ErrorCode::DegenerateScale);
  Vector r(3);
  r << -1, 0, 1;
  CHECK(code_of([&] { rule_of_thumb_bandwidth(cells(Matrix::Zero(3, 1)), r, 0.5); }) ==
        ErrorCode::DegenerateDesign);
  CHECK(code_of([&] { rule_of_thumb_bandwidth(cells(Matrix::Ones(3, 1)), r, 1.0); }) == ErrorCode::InvalidTau);
}

TEST_CASE("Powell estimator small examples") {
  const JacobianEstimate one = powell_jacobian(cells(Matrix::Ones(1, 1)), Vector::Zero(1), 1.0);
  CHECK(one.d_hat(0, 0) == 0.5);
  CHECK(one.kernel_hits == 1);

  Vector r(2);
  r << 0.5, 2.0;
  const JacobianEstimate two = powell_jacobian(cells(Matrix::Ones(2, 1)), r, 1.0);
  CHECK(two.d_hat(0, 0) == 0.25);
  CHECK(two.kernel_hits == 1);

  Vector edge(2);
  edge << 1.0, -1.0;
  CHECK(powell_jacobian(cells(Matrix::Ones(2, 1)), edge, 1.0).kernel_hits == 2);

  CHECK(code_of([] { powell_jacobian(cells(Matrix::Ones(1, 1)), Vector::Zero(1), 0.0); }) ==
        ErrorCode::NonpositiveBandwidth);
}

TEST_CASE("Powell estimator properties on a DGP panel") {
  MonteCarloConfig c;
  c.G = c.H = 25;
  c.d = 4;
  const PanelArray p = generate_dgp(c, 1);
  const QuantileFit fit = fit_qr(p, 0.3);

  SUBCASE("PSD and symmetric") {
    const JacobianEstimate j = powell_jacobian(p, fit.residuals, 0.4);
    CHECK(j.d_hat == j.d_hat.transpose());
    const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(j.d_hat).eigenvalues().minCoeff();
    CHECK(min_eig >= -1e-12 * j.d_hat.norm());
  }
  SUBCASE("hits are monotone in the bandwidth") {
    int last = 0;
    for (double ell : {0.01, 0.05, 0.1, 0.3, 0.7, 1.5, 4.0}) {
      const int hits = powell_jacobian(p, fit.residuals, ell).kernel_hits;
      CHECK(hits >= last);
      last = hits;
    }
  }
  SUBCASE("large bandwidth recovers the scaled Gram matrix") {
    const double ell = 10.0 * fit.residuals.cwiseAbs().maxCoeff();
    const JacobianEstimate j = powell_jacobian(p, fit.residuals, ell);
    CHECK(j.kernel_hits == p.size());
    const Matrix expected = (0.5 / (p.size() * ell)) * (p.x().transpose() * p.x());
    CHECK((j.d_hat - expected).norm() <= 1e-13 * expected.norm());
  }
}

TEST_CASE("AMSE-optimal bandwidth") {
  CHECK(amse_optimal_bandwidth(1.0 / 4.5, Vector::Ones(1), 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(amse_optimal_bandwidth(1.0, Vector::Ones(1), 32.0) ==
        doctest::Approx(0.67548001926030670672).epsilon(1e-13));
  const Vector bias = Vector::LinSpaced(3, 0.5, 1.5);
  CHECK(amse_optimal_bandwidth(2.0, bias, 200.0) / amse_optimal_bandwidth(2.0, bias, 100.0) ==
        doctest::Approx(std::pow(2.0, -0.2)).epsilon(1e-14));
  CHECK(code_of([] { amse_optimal_bandwidth(1.0, Vector::Zero(2), 10.0); }) == ErrorCode::ZeroBias);
}
