#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "twqr/error.hpp"
#include "twqr/montecarlo.hpp"
#include "twqr/normal.hpp"
#include "twqr/rng.hpp"

namespace twqr {

namespace {

constexpr std::uint32_t kOracleReplication = 0xFFFFFFFFu;
// Stream families: outer row latents, outer column latents, and the inner
// samples that integrate out everything else at each stage.
constexpr std::uint32_t kRowOuter = 32;
constexpr std::uint32_t kColOuter = 33;
constexpr std::uint32_t kCellInner = 34;
constexpr std::uint32_t kRowStageCol = 35;
constexpr std::uint32_t kRowStageCell = 36;
constexpr std::uint32_t kColStageRow = 37;
constexpr std::uint32_t kColStageCell = 38;
constexpr std::uint32_t kPairRow = 39;
constexpr std::uint32_t kPairCol = 40;

// Standard normal latents for `count` draws: rows 1..d-1 feed the regressors,
// row 0 is the error latent.
Matrix draw_latents(std::uint64_t seed, std::uint32_t family, int count, int d) {
  PhiloxEngine engine(seed, kOracleReplication, stream_id(family));
  std::normal_distribution<double> dist;
  Matrix out(d, count);
  for (int i = 0; i < count; ++i) {
    for (int k = 1; k < d; ++k) out(k, i) = dist(engine);
    out(0, i) = dist(engine);
  }
  return out;
}

// Regressor shift (intercept slot set to `intercept`) and error shift.
struct Draws {
  Matrix x;  // d x count
  Vector e;  // count
};

Draws combine(const Matrix& latents, double wx, double we, double intercept) {
  Draws out{wx * latents, we * latents.row(0).transpose()};
  out.x.row(0).setConstant(intercept);
  return out;
}

Draws combine(const Matrix& first, double wx1, double we1, const Matrix& second, double wx2, double we2,
              double intercept) {
  Draws out{wx1 * first + wx2 * second, we1 * first.row(0).transpose() + we2 * second.row(0).transpose()};
  out.x.row(0).setConstant(intercept);
  return out;
}

struct Moments {
  Matrix mean_cov;  // covariance over outer draws of E[Psi | outer]
  Matrix cond_cov;  // average over outer draws of Var(Psi | outer)
};

// For each outer draw k, Psi = (a_k + z)(tau - 1{eps <= q - s_k}) with (z, eps)
// ranging over the common inner sample. Outer draws are visited in order of
// their threshold so the inner sums below it grow monotonically.
Moments conditional_moments(const Draws& outer, const Draws& inner, double q, double tau) {
  const int d = static_cast<int>(outer.x.rows());
  const int K = static_cast<int>(outer.x.cols());
  const int M = static_cast<int>(inner.x.cols());
  const double Md = M, Kd = K;

  std::vector<int> outer_order(static_cast<std::size_t>(K)), inner_order(static_cast<std::size_t>(M));
  std::iota(outer_order.begin(), outer_order.end(), 0);
  std::iota(inner_order.begin(), inner_order.end(), 0);
  std::sort(outer_order.begin(), outer_order.end(), [&](int l, int r) {
    return outer.e(l) != outer.e(r) ? outer.e(l) > outer.e(r) : l < r;  // decreasing shift = increasing threshold
  });
  std::sort(inner_order.begin(), inner_order.end(),
            [&](int l, int r) { return inner.e(l) != inner.e(r) ? inner.e(l) < inner.e(r) : l < r; });

  const Vector z_sum = inner.x.rowwise().sum();
  const Matrix z_outer = inner.x * inner.x.transpose();

  Vector below_sum = Vector::Zero(d);
  double below_count = 0;
  Matrix below_outer_total = Matrix::Zero(d, d);
  Vector mean_sum = Vector::Zero(d);
  Matrix mean_outer = Matrix::Zero(d, d);
  Matrix aa = Matrix::Zero(d, d);
  Matrix cross = Matrix::Zero(d, d);
  Vector mean(d), c(d);
  std::size_t next = 0;
  for (int k = 0; k < K; ++k) {
    const int i = outer_order[static_cast<std::size_t>(k)];
    const double threshold = q - outer.e(i);
    while (next < inner_order.size() && inner.e(inner_order[next]) <= threshold) {
      const auto z = inner.x.col(inner_order[next]);
      below_sum += z;
      below_count += 1;
      // Counted once for this and every later outer draw.
      below_outer_total.noalias() += (Kd - k) * z * z.transpose();
      ++next;
    }
    const auto a = outer.x.col(i);
    // E[(a + z)(tau - I)] and the pieces of E[(a + z)(a + z)'(tau - I)^2].
    mean.noalias() = (tau * (Md * a + z_sum) - (below_count * a + below_sum)) / Md;
    c.noalias() = (tau * tau * z_sum + (1.0 - 2.0 * tau) * below_sum) / Md;
    aa.noalias() += ((tau * tau * Md + (1.0 - 2.0 * tau) * below_count) / Md) * a * a.transpose();
    cross.noalias() += a * c.transpose();
    mean_sum += mean;
    mean_outer.noalias() += mean * mean.transpose();
  }
  const Matrix second_sum =
      aa + cross + cross.transpose() + (tau * tau * Kd * z_outer + (1.0 - 2.0 * tau) * below_outer_total) / Md;

  const Vector grand = mean_sum / Kd;
  Moments out;
  out.mean_cov = (mean_outer - Kd * grand * grand.transpose()) / (Kd - 1.0);
  out.cond_cov = (second_sum - mean_outer) / Kd;
  return out;
}

double safe_ratio(double num, double den) {
  return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}

}  // namespace

VarianceOracle oracle_variance_components(const MonteCarloConfig& config, double tau, int mc_inner, int mc_outer) {
  require_valid_tau(tau);
  if (mc_inner < 10000) throw Error(ErrorCode::InvalidConfig, "mc_inner must be at least 1e4");
  if (mc_outer < 2) throw Error(ErrorCode::InvalidConfig, "mc_outer must be at least 2");
  if (config.d < 1) throw Error(ErrorCode::InvalidConfig, "d must be positive");

  const int d = config.d;
  const auto& w = config.weights;
  const std::uint64_t seed = config.seed;
  const double q = error_scale(w) * normal::quantile(tau);

  // E[Psi | U]: the column and cell latents are integrated out by the inner sample.
  const Moments rows = conditional_moments(
      combine(draw_latents(seed, kRowOuter, mc_outer, d), w.wUx, w.wUe, 1.0),
      combine(draw_latents(seed, kRowStageCol, mc_inner, d), w.wVx, w.wVe,
              draw_latents(seed, kRowStageCell, mc_inner, d), w.wWx, w.wWe, 0.0),
      q, tau);
  // E[Psi | V].
  const Moments cols = conditional_moments(
      combine(draw_latents(seed, kColOuter, mc_outer, d), w.wVx, w.wVe, 1.0),
      combine(draw_latents(seed, kColStageRow, mc_inner, d), w.wUx, w.wUe,
              draw_latents(seed, kColStageCell, mc_inner, d), w.wWx, w.wWe, 0.0),
      q, tau);
  // E[Psi | U, V] over independent (U, V) pairs, cell latents integrated out.
  const Moments cells = conditional_moments(
      combine(draw_latents(seed, kPairRow, mc_outer, d), w.wUx, w.wUe, draw_latents(seed, kPairCol, mc_outer, d),
              w.wVx, w.wVe, 1.0),
      combine(draw_latents(seed, kCellInner, mc_inner, d), w.wWx, w.wWe, 0.0), q, tau);

  VarianceOracle out;
  out.sigma_I2 = evc(rows.mean_cov);
  out.sigma_II2 = evc(cols.mean_cov);
  out.sigma_III2 = evc(cells.mean_cov - rows.mean_cov - cols.mean_cov);
  out.sigma_IV2 = evc(cells.cond_cov);

  const double G = config.G;
  const double H = config.H;
  out.omega_GH = (H * out.sigma_I2 + G * out.sigma_II2 + out.sigma_III2 + out.sigma_IV2) / (G * H);
  out.r_GH = std::min({safe_ratio(G, out.sigma_I2(0, 0)), safe_ratio(H, out.sigma_II2(0, 0)), G * H});
  return out;
}

}  // namespace twqr
