#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twqr/crve.hpp"
#include "twqr/panel.hpp"

namespace twqr {

/// Loadings of the regressor (x) and error (e) on the row latent U_g, the
/// column latent V_h and the cell latent W_gh.
struct DgpWeights {
  double wUx = 1, wVx = 1, wWx = 1;
  double wUe = 1, wVe = 1, wWe = 1;
};

struct MonteCarloConfig {
  int G = 50;
  int H = 50;
  int d = 10;  // intercept plus d-1 slopes
  double tau = 0.5;
  DgpWeights weights;
  int reps = 1000;
  std::uint64_t seed = 1;
  std::vector<CrveKind> methods{std::begin(kAllCrveKinds), std::end(kAllCrveKinds)};
  double null_value = 1.0;
  double level = 0.05;

  /// Throws InvalidConfig / InvalidTau.
  void validate() const;
};

/// Additive-normal two-way array: x_gh,j = wUx U + wVx V + wWx W for j >= 2,
/// x_gh,1 = 1, e = wUe U + wVe V + wWe W, y = sum_j x_gh,j + e. Draws come
/// from counter-based streams keyed by (seed, rep), so any replication can
/// be regenerated independently.
PanelArray generate_dgp(const MonteCarloConfig& config, int rep);

/// Population quantities of the additive-normal design at quantile tau.
double error_scale(const DgpWeights& w);
Vector true_coefficients(const MonteCarloConfig& config);
/// D(tau) = f_e(q_tau) E[x x'] (e independent of x).
Matrix true_jacobian(const MonteCarloConfig& config);

/// Everything computed for a single replication.
struct ReplicationResult {
  bool ok = false;
  std::string error;
  QuantileFit fit;
  BandwidthDiagnostics bandwidth;
  JacobianEstimate jacobian;
  std::vector<VarianceEstimate> variances;  // one per config.methods entry
  std::vector<TestResult> tests;            // coefficient d-1 vs null_value
};

ReplicationResult run_replication(const MonteCarloConfig& config, int rep);

struct MethodRejection {
  CrveKind kind = CrveKind::CTW;
  int rejections = 0;
  double frequency = 0;
  double mc_se = 0;  // sqrt(p (1 - p) / valid_reps)
};

struct RejectionReport {
  MonteCarloConfig config;
  int valid_reps = 0;
  int failures = 0;
  bool failed = false;  // more than 1% of replications failed
  std::vector<std::string> failure_messages;  // first few, in replication order
  std::vector<MethodRejection> methods;
};

RejectionReport rejection_experiment(const MonteCarloConfig& config, unsigned threads = 1);

/// Component variances of the population score at the true coefficients.
struct VarianceOracle {
  Matrix sigma_I2;
  Matrix sigma_II2;
  Matrix sigma_III2;
  Matrix sigma_IV2;
  Matrix omega_GH;  // (H s_I + G s_II + s_III + s_IV) / (G H)
  double r_GH = 0;  // min{G / s_I[0,0], H / s_II[0,0], G H}
};

/// Nested Monte Carlo at the true coefficients. E[Psi | U], E[Psi | V] and
/// E[Psi | U, V] are each evaluated at mc_outer outer draws, with the
/// remaining latents integrated out by a common inner sample of size mc_inner.
/// Row and column parts are the covariances of the first two, the interaction
/// part is what the third adds beyond them, and the idiosyncratic part is the
/// mean of Var(Psi | U, V).
VarianceOracle oracle_variance_components(const MonteCarloConfig& config, double tau, int mc_inner,
                                          int mc_outer = 200000);

struct NonGaussianSummary {
  double kurtosis = 0;         // m4 / m2^2
  double excess_kurtosis = 0;  // kurtosis - 3
  double ks_vs_fitted_normal = 0;
  double ks_vs_reference = 0;
  double mean = 0;
  double stddev = 0;
};

struct NonGaussianResult {
  std::vector<double> empirical;  // sqrt(GH) (beta_hat - 1), successful replications
  std::vector<double> reference;  // kappa Z_U (Z_V + c), same length as empirical
  double kappa = 0;
  int failures = 0;
  NonGaussianSummary summary;
};

/// Scalar median regression with product-structured regressor and sign-driven
/// errors whose limit is a scaled Z_U (Z_V + c).
NonGaussianResult nongaussian_demo(int G, int H, double c, int reps, std::uint64_t seed, unsigned threads = 1);

/// One replication of the design above.
PanelArray generate_nongaussian(int G, int H, double c, std::uint64_t seed, int rep);

}  // namespace twqr
