#include "twqr/jacobian.hpp"

#include <cmath>
#include <vector>

#include "twqr/error.hpp"
#include "twqr/normal.hpp"
#include "twqr/stats.hpp"

namespace twqr {

double alpha(double tau) {
  require_valid_tau(tau);
  const double z = normal::quantile(tau);
  return (1.0 - z) * (1.0 - z) * normal::pdf(z);
}

Vector vech(const Matrix& m) {
  const Eigen::Index d = m.rows();
  Vector out(d * (d + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index col = 0; col < d; ++col) {
    for (Eigen::Index row = col; row < d; ++row) out(k++) = m(row, col);
  }
  return out;
}

BandwidthDiagnostics rule_of_thumb_bandwidth(const PanelArray& panel, const Vector& residuals, double tau) {
  const double alpha_tau = alpha(tau);
  if (residuals.size() != panel.size()) throw Error(ErrorCode::DimensionMismatch, "one residual per cell required");
  if (panel.size() < 2) throw Error(ErrorCode::DegenerateScale, "need at least two cells");

  BandwidthDiagnostics diag;
  diag.alpha_tau = alpha_tau;
  diag.sigma_hat = stats::mad({residuals.data(), static_cast<std::size_t>(residuals.size())}) / 0.6745;
  if (!(diag.sigma_hat > 0.0)) throw Error(ErrorCode::DegenerateScale, "MAD of residuals is zero");

  // ||vech(x x')||^2 = sum_{j >= k} x_j^2 x_k^2, accumulated without forming Q.
  const Matrix& x = panel.x();
  const Eigen::Index d = x.cols();
  const auto n = static_cast<double>(panel.size());
  double q_norm_sum = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const double xk2 = x(i, k) * x(i, k);
      for (Eigen::Index j = k; j < d; ++j) q_norm_sum += x(i, j) * x(i, j) * xk2;
    }
  }
  diag.q_norm_mean = q_norm_sum / n;
  const Matrix mean_outer = (x.transpose() * x) / n;
  diag.q_mean_norm = vech(mean_outer).squaredNorm();
  if (!(diag.q_mean_norm > 0.0)) throw Error(ErrorCode::DegenerateDesign, "mean of vech(x x') is zero");

  diag.ell = diag.sigma_hat * std::pow(n, -0.2) *
             std::pow(4.5 * diag.q_norm_mean / (alpha_tau * diag.q_mean_norm), 0.2);
  return diag;
}

JacobianEstimate powell_jacobian(const PanelArray& panel, const Vector& residuals, double ell) {
  if (!(ell > 0.0)) throw Error(ErrorCode::NonpositiveBandwidth, "bandwidth must be positive");
  if (residuals.size() != panel.size()) throw Error(ErrorCode::DimensionMismatch, "one residual per cell required");

  const Matrix& x = panel.x();
  std::vector<Eigen::Index> hits;
  for (Eigen::Index i = 0; i < residuals.size(); ++i) {
    if (std::abs(residuals(i)) <= ell) hits.push_back(i);
  }
  Matrix selected(static_cast<Eigen::Index>(hits.size()), x.cols());
  for (std::size_t k = 0; k < hits.size(); ++k) selected.row(static_cast<Eigen::Index>(k)) = x.row(hits[k]);

  JacobianEstimate out;
  out.bandwidth = ell;
  out.kernel_hits = static_cast<int>(hits.size());
  const double weight = 0.5 / (static_cast<double>(panel.size()) * ell);
  out.d_hat = Matrix::Zero(x.cols(), x.cols());
  out.d_hat.selfadjointView<Eigen::Lower>().rankUpdate(selected.transpose(), weight);
  out.d_hat.triangularView<Eigen::StrictlyUpper>() = out.d_hat.transpose();
  return out;
}

double amse_optimal_bandwidth(double trace_term, const Vector& bias, double n) {
  const double bias_sq = bias.squaredNorm();
  if (!(bias_sq > 0.0)) throw Error(ErrorCode::ZeroBias, "bias vector is zero");
  if (!(trace_term > 0.0)) throw Error(ErrorCode::InvalidConfig, "trace term must be positive");
  if (!(n > 0.0)) throw Error(ErrorCode::InvalidConfig, "sample size must be positive");
  return std::pow(n, -0.2) * std::pow(4.5 * trace_term / bias_sq, 0.2);
}

}  // namespace twqr
