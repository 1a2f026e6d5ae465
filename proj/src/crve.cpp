#include "twqr/crve.hpp"

#include <cmath>

#include "twqr/error.hpp"
#include "twqr/normal.hpp"

namespace twqr {

std::string_view to_string(CrveKind kind) {
  switch (kind) {
    case CrveKind::CTW: return "ctw";
    case CrveKind::CG: return "cg";
    case CrveKind::CH: return "ch";
    case CrveKind::CI: return "ci";
    case CrveKind::CTW_II: return "ctw2";
  }
  return "?";
}

std::optional<CrveKind> parse_crve_kind(std::string_view name) {
  for (CrveKind kind : kAllCrveKinds) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

namespace {

// a' a, exactly symmetric.
Matrix gram(const Matrix& a) {
  Matrix out = Matrix::Zero(a.cols(), a.cols());
  out.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

struct ClusterSums {
  Matrix row_sums;  // G x d
  Matrix col_sums;  // H x d
  Matrix own;       // sum psi psi'
  double norm = 1;  // n^2
};

ClusterSums cluster_sums(const ScoreMatrix& scores) {
  if (static_cast<int>(scores.g.size()) != scores.n() || static_cast<int>(scores.h.size()) != scores.n()) {
    throw Error(ErrorCode::DimensionMismatch, "cluster indices do not match score rows");
  }
  ClusterSums out;
  out.row_sums = Matrix::Zero(scores.G, scores.d());
  out.col_sums = Matrix::Zero(scores.H, scores.d());
  for (int i = 0; i < scores.n(); ++i) {
    const auto cell = static_cast<std::size_t>(i);
    out.row_sums.row(scores.g[cell]) += scores.scores.row(i);
    out.col_sums.row(scores.h[cell]) += scores.scores.row(i);
  }
  out.own = gram(scores.scores);
  const auto n = static_cast<double>(scores.n());
  out.norm = n * n;
  return out;
}

void require_clusters(const ScoreMatrix& scores, CrveKind kind) {
  const bool need_rows = kind == CrveKind::CTW || kind == CrveKind::CTW_II || kind == CrveKind::CG;
  const bool need_cols = kind == CrveKind::CTW || kind == CrveKind::CTW_II || kind == CrveKind::CH;
  if ((need_rows && scores.G < 2) || (need_cols && scores.H < 2)) {
    throw Error(ErrorCode::TooFewClusters, "G = " + std::to_string(scores.G) + ", H = " + std::to_string(scores.H) +
                                               " for " + std::string(to_string(kind)));
  }
}

}  // namespace

Matrix evc(const Matrix& m, int& clipped) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "evc needs a square matrix");
  if (!m.allFinite()) throw Error(ErrorCode::NonFinite, "evc input has non-finite entries");
  clipped = 0;
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(m));
  Vector values = eig.eigenvalues();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < 0.0) {
      values(i) = 0.0;
      ++clipped;
    }
  }
  const Matrix& v = eig.eigenvectors();
  return symmetrized(v * values.asDiagonal() * v.transpose());
}

Matrix evc(const Matrix& m) {
  int clipped = 0;
  return evc(m, clipped);
}

OmegaComponents omega_ctw(const ScoreMatrix& scores, bool require_two_clusters) {
  if (require_two_clusters) require_clusters(scores, CrveKind::CTW);
  const ClusterSums sums = cluster_sums(scores);
  OmegaComponents out;
  out.kind = CrveKind::CTW;
  out.omega_diag = sums.own / sums.norm;
  out.omega_I_raw = (gram(sums.row_sums) - sums.own) / sums.norm;
  out.omega_II_raw = (gram(sums.col_sums) - sums.own) / sums.norm;
  out.omega_I = evc(out.omega_I_raw, out.clipped_I);
  out.omega_II = evc(out.omega_II_raw, out.clipped_II);
  out.omega_total = out.omega_I + out.omega_II + out.omega_diag;
  return out;
}

OmegaComponents omega_variant(const ScoreMatrix& scores, CrveKind kind) {
  require_clusters(scores, kind);
  if (kind == CrveKind::CTW) return omega_ctw(scores);

  const ClusterSums sums = cluster_sums(scores);
  const Matrix row_form = gram(sums.row_sums) / sums.norm;
  const Matrix col_form = gram(sums.col_sums) / sums.norm;
  OmegaComponents out;
  out.kind = kind;
  out.omega_diag = sums.own / sums.norm;
  out.omega_I_raw = (gram(sums.row_sums) - sums.own) / sums.norm;
  out.omega_II_raw = (gram(sums.col_sums) - sums.own) / sums.norm;
  out.omega_I = out.omega_I_raw;
  out.omega_II = out.omega_II_raw;
  switch (kind) {
    case CrveKind::CG: out.omega_total = row_form; break;
    case CrveKind::CH: out.omega_total = col_form; break;
    case CrveKind::CI: out.omega_total = out.omega_diag; break;
    case CrveKind::CTW_II: out.omega_total = row_form + col_form; break;
    case CrveKind::CTW: break;
  }
  return out;
}

Matrix sandwich(const Matrix& d_hat, const Matrix& omega) {
  if (d_hat.rows() != d_hat.cols() || omega.rows() != d_hat.rows() || omega.cols() != d_hat.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "bread and meat dimensions differ");
  }
  const Matrix bread = symmetrized(d_hat);
  const Vector eigenvalues = Eigen::SelfAdjointEigenSolver<Matrix>(bread, Eigen::EigenvaluesOnly).eigenvalues();
  const double largest = eigenvalues.maxCoeff();
  if (!(largest > 0.0) || !(eigenvalues.minCoeff() > 1e-10 * largest)) {
    throw Error(ErrorCode::SingularJacobian, "D_hat eigenvalue range [" + std::to_string(eigenvalues.minCoeff()) +
                                                 ", " + std::to_string(largest) + "]");
  }
  const Eigen::LLT<Matrix> chol(bread);
  const Matrix left = chol.solve(omega);                  // D^-1 Omega
  const Matrix sigma = chol.solve(left.transpose());      // D^-1 Omega' D^-1
  return symmetrized(sigma);
}

VarianceEstimate sandwich(const JacobianEstimate& jacobian, const OmegaComponents& omega, CrveKind kind) {
  VarianceEstimate out;
  out.kind = kind;
  out.d_hat = jacobian.d_hat;
  out.omega = omega;
  out.sigma_hat = sandwich(jacobian.d_hat, omega.omega_total);
  out.std_errors = out.sigma_hat.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

TestResult t_test(double estimate, double std_error, int j, double b0) {
  if (!(std_error > 0.0) || !std::isfinite(std_error)) {
    throw Error(ErrorCode::ZeroStdError, "standard error of coefficient " + std::to_string(j) + " is not positive");
  }
  TestResult out;
  out.coefficient_index = j;
  out.null_value = b0;
  out.t_stat = (estimate - b0) / std_error;
  out.p_value = 2.0 * normal::sf(std::abs(out.t_stat));
  return out;
}

TestResult t_test(const QuantileFit& fit, const VarianceEstimate& var, int j, double b0) {
  if (j < 0 || j >= fit.beta_hat.size() || j >= var.std_errors.size()) {
    throw Error(ErrorCode::DimensionMismatch, "coefficient index " + std::to_string(j) + " out of range");
  }
  return t_test(fit.beta_hat(j), var.std_errors(j), j, b0);
}

}  // namespace twqr
