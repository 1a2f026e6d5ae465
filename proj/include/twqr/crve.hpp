#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "twqr/jacobian.hpp"
#include "twqr/qr.hpp"

namespace twqr {

/// CTW: two-way with eigenvalue correction. CG / CH: one-way by row / column
/// cluster. CI: cell-level only. CTW_II: CG + CH without correction.
enum class CrveKind { CTW, CG, CH, CI, CTW_II };

inline constexpr CrveKind kAllCrveKinds[] = {CrveKind::CTW, CrveKind::CG, CrveKind::CH, CrveKind::CI,
                                             CrveKind::CTW_II};

/// Short CLI name: ctw, cg, ch, ci, ctw2.
std::string_view to_string(CrveKind kind);
std::optional<CrveKind> parse_crve_kind(std::string_view name);

struct OmegaComponents {
  CrveKind kind = CrveKind::CTW;
  Matrix omega_I_raw;   // same-row, different-column products
  Matrix omega_II_raw;  // same-column, different-row products
  Matrix omega_I;       // evc(omega_I_raw)
  Matrix omega_II;      // evc(omega_II_raw)
  Matrix omega_diag;    // own products
  Matrix omega_total;   // the matrix used in the sandwich for `kind`
  int clipped_I = 0;    // eigenvalues clipped by the correction
  int clipped_II = 0;
};

struct VarianceEstimate {
  CrveKind kind = CrveKind::CTW;
  Matrix d_hat;
  OmegaComponents omega;
  Matrix sigma_hat;
  Vector std_errors;
};

struct TestResult {
  int coefficient_index = 0;
  double null_value = 0;
  double t_stat = 0;
  double p_value = 1;
};

/// Projection onto the PSD cone: symmetrize, clip negative eigenvalues to 0.
Matrix evc(const Matrix& m);
Matrix evc(const Matrix& m, int& clipped);

/// Two-way meat. Sums run over present cells and are divided by n^2.
/// require_two_clusters=false skips the G, H >= 2 guard.
OmegaComponents omega_ctw(const ScoreMatrix& scores, bool require_two_clusters = true);

OmegaComponents omega_variant(const ScoreMatrix& scores, CrveKind kind);

/// Sigma = D^-1 Omega D^-1 from a single factorization of D.
VarianceEstimate sandwich(const JacobianEstimate& jacobian, const OmegaComponents& omega, CrveKind kind);
Matrix sandwich(const Matrix& d_hat, const Matrix& omega);

/// Two-sided normal-reference t-test of beta_j = b0.
TestResult t_test(const QuantileFit& fit, const VarianceEstimate& var, int j, double b0);
TestResult t_test(double estimate, double std_error, int j, double b0);

}  // namespace twqr
