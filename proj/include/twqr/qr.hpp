#pragma once

#include <vector>

#include "twqr/panel.hpp"

namespace twqr {

struct QrOptions {
  /// Stopping tolerance on the primal-dual gap. When relative_gap is set the
  /// threshold is gap_tol * (1 + |objective|).
  double gap_tol = 1e-8;
  bool relative_gap = true;
  int max_iter = 200;
};

struct SolverInfo {
  int iterations = 0;
  double duality_gap = 0.0;
  bool converged = false;
};

struct QuantileFit {
  double tau = 0.5;
  Vector beta_hat;
  Vector residuals;   // y - x * beta_hat, one per cell
  double objective = 0.0;
  SolverInfo solver;
};

/// Per-cell estimated scores x_gh * (tau - 1{y_gh <= x_gh' beta}).
struct ScoreMatrix {
  Matrix scores;  // n x d
  int G = 0;
  int H = 0;
  std::vector<int> g;
  std::vector<int> h;

  int n() const { return static_cast<int>(scores.rows()); }
  int d() const { return static_cast<int>(scores.cols()); }
};

/// rho_tau(u) = u * (tau - 1{u <= 0}).
double check_loss(double u, double tau);

double check_loss_sum(const Vector& residuals, double tau);

/// Minimizes sum rho_tau(y - x b) over b. Throws RankDeficient or InvalidTau.
/// If the iteration limit is reached the last iterate is returned with
/// solver.converged == false.
QuantileFit fit_qr(const Matrix& x, const Vector& y, double tau, const QrOptions& opts = {});
QuantileFit fit_qr(const PanelArray& panel, double tau, const QrOptions& opts = {});

ScoreMatrix score_matrix(const PanelArray& panel, const Vector& beta, double tau);

}  // namespace twqr
