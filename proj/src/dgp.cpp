#include <cmath>
#include <random>

#include "twqr/error.hpp"
#include "twqr/montecarlo.hpp"
#include "twqr/normal.hpp"
#include "twqr/rng.hpp"

namespace twqr {

namespace latent {
constexpr std::uint32_t kRowX = 1;
constexpr std::uint32_t kColX = 2;
constexpr std::uint32_t kCellX = 3;
constexpr std::uint32_t kRowE = 4;
constexpr std::uint32_t kColE = 5;
constexpr std::uint32_t kCellE = 6;
}  // namespace latent

void MonteCarloConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  require_valid_tau(tau);
  if (G < 2 || H < 2) fail("G and H must be at least 2");
  if (d < 2 || d > 0xFFFF) fail("d must lie in [2, 65535]");
  if (reps < 1) fail("reps must be at least 1");
  if (methods.empty()) fail("at least one variance method is required");
  if (!(level > 0.0 && level < 1.0)) fail("level must lie in (0,1)");
  if (!std::isfinite(null_value)) fail("null_value must be finite");
  for (double v : {weights.wUx, weights.wVx, weights.wWx, weights.wUe, weights.wVe, weights.wWe}) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail("weights must be finite and nonnegative");
  }
  if (!(weights.wWx > 0.0)) fail("wWx must be positive");
}

double error_scale(const DgpWeights& w) { return std::sqrt(w.wUe * w.wUe + w.wVe * w.wVe + w.wWe * w.wWe); }

Vector true_coefficients(const MonteCarloConfig& config) {
  Vector beta = Vector::Ones(config.d);
  beta(0) += error_scale(config.weights) * normal::quantile(config.tau);
  return beta;
}

Matrix true_jacobian(const MonteCarloConfig& config) {
  const double sigma_e = error_scale(config.weights);
  if (!(sigma_e > 0.0)) throw Error(ErrorCode::InvalidConfig, "error scale is zero; density undefined");
  const double density = normal::pdf(normal::quantile(config.tau)) / sigma_e;
  const auto& w = config.weights;
  const double x_var = w.wUx * w.wUx + w.wVx * w.wVx + w.wWx * w.wWx;
  Vector second_moment = Vector::Constant(config.d, x_var);
  second_moment(0) = 1.0;
  return density * Matrix(second_moment.asDiagonal());
}

namespace {

Vector normals(std::uint64_t seed, int rep, std::uint32_t stream, Eigen::Index count) {
  PhiloxEngine engine(seed, static_cast<std::uint32_t>(rep), stream);
  std::normal_distribution<double> dist;
  Vector out(count);
  for (Eigen::Index i = 0; i < count; ++i) out(i) = dist(engine);
  return out;
}

// out(g*H + h) += weight * (row(g), col(h) or cell(g*H+h)) for one latent family triple.
void add_two_way(Vector& out, int G, int H, double w_row, double w_col, double w_cell, std::uint64_t seed, int rep,
                 std::uint32_t row_stream, std::uint32_t col_stream, std::uint32_t cell_stream) {
  if (w_row != 0.0) {
    const Vector u = normals(seed, rep, row_stream, G);
    for (int g = 0; g < G; ++g) out.segment(static_cast<Eigen::Index>(g) * H, H).array() += w_row * u(g);
  }
  if (w_col != 0.0) {
    const Vector v = normals(seed, rep, col_stream, H);
    for (int g = 0; g < G; ++g) out.segment(static_cast<Eigen::Index>(g) * H, H) += w_col * v;
  }
  if (w_cell != 0.0) out += w_cell * normals(seed, rep, cell_stream, static_cast<Eigen::Index>(G) * H);
}

}  // namespace

PanelArray generate_dgp(const MonteCarloConfig& config, int rep) {
  const int G = config.G;
  const int H = config.H;
  const Eigen::Index n = static_cast<Eigen::Index>(G) * H;
  const auto& w = config.weights;

  Matrix x(n, config.d);
  x.col(0).setOnes();
  for (int j = 1; j < config.d; ++j) {
    Vector column = Vector::Zero(n);
    const auto idx = static_cast<std::uint32_t>(j);
    add_two_way(column, G, H, w.wUx, w.wVx, w.wWx, config.seed, rep, stream_id(latent::kRowX, idx),
                stream_id(latent::kColX, idx), stream_id(latent::kCellX, idx));
    x.col(j) = column;
  }
  Vector e = Vector::Zero(n);
  add_two_way(e, G, H, w.wUe, w.wVe, w.wWe, config.seed, rep, stream_id(latent::kRowE), stream_id(latent::kColE),
              stream_id(latent::kCellE));

  Vector y = x.rowwise().sum() + e;

  std::vector<int> g(static_cast<std::size_t>(n)), h(static_cast<std::size_t>(n));
  for (int gi = 0; gi < G; ++gi) {
    for (int hi = 0; hi < H; ++hi) {
      const auto cell = static_cast<std::size_t>(gi) * static_cast<std::size_t>(H) + static_cast<std::size_t>(hi);
      g[cell] = gi;
      h[cell] = hi;
    }
  }
  std::vector<std::string> names{"const"};
  for (int j = 2; j <= config.d; ++j) names.push_back("x" + std::to_string(j));
  return PanelArray(G, H, std::move(g), std::move(h), std::move(y), std::move(x), std::move(names));
}

}  // namespace twqr
