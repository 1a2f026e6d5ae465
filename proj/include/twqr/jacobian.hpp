#pragma once

#include "twqr/panel.hpp"

namespace twqr {

struct JacobianEstimate {
  Matrix d_hat;          // symmetric PSD, d x d
  double bandwidth = 0;  // ell
  int kernel_hits = 0;   // cells with |residual| <= ell
};

struct BandwidthDiagnostics {
  double sigma_hat = 0;    // MAD / 0.6745
  double alpha_tau = 0;
  double q_norm_mean = 0;  // (1/n) sum ||Q_gh||^2
  double q_mean_norm = 0;  // ||(1/n) sum Q_gh||^2
  double ell = 0;
};

/// (1 - z)^2 * phi(z) with z = Phi^{-1}(tau).
double alpha(double tau);

/// Column-major lower triangle: (m00, m10, ..., m(d-1)0, m11, m21, ...).
Vector vech(const Matrix& m);

/// Gaussian-reference plug-in bandwidth for the Powell estimator, using the
/// realized cell count n in place of G*H.
BandwidthDiagnostics rule_of_thumb_bandwidth(const PanelArray& panel, const Vector& residuals, double tau);

/// D_hat = (1 / (n ell)) sum K(u/ell) x x' with K(u) = 1/2 on |u| <= 1.
JacobianEstimate powell_jacobian(const PanelArray& panel, const Vector& residuals, double ell);

/// n^{-1/5} (4.5 trace / |bias|^2)^{1/5} for known population moments.
double amse_optimal_bandwidth(double trace_term, const Vector& bias, double n);

}  // namespace twqr
