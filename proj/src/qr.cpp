#include "twqr/qr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "twqr/error.hpp"

namespace twqr {

void require_valid_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::InvalidTau, "tau must lie in (0,1), got " + std::to_string(tau));
}

double check_loss(double u, double tau) {
  require_valid_tau(tau);
  return u * (tau - (u <= 0.0 ? 1.0 : 0.0));
}

double check_loss_sum(const Vector& residuals, double tau) {
  require_valid_tau(tau);
  double total = 0.0;
  for (Eigen::Index i = 0; i < residuals.size(); ++i) {
    const double u = residuals(i);
    total += u * (tau - (u <= 0.0 ? 1.0 : 0.0));
  }
  return total;
}

namespace {

constexpr double kStepDamping = 0.99995;

// Largest t in (0, 1] keeping v + t * dv >= 0, over all coordinates.
double max_step(const Vector& v, const Vector& dv) {
  double step = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) step = std::min(step, -v(i) / dv(i));
  }
  return step;
}

double damped(double step) { return std::min(kStepDamping * step, 1.0); }

}  // namespace

// Primal-dual path following on the bounded dual LP
//
//   max_a  y'a   s.t.  X'a = (1 - tau) X'1,  0 <= a <= 1,
//
// whose multipliers on the equality constraint are -beta. Slacks: s = 1 - a;
// z, w >= 0 are the negative and positive parts of the QR residual. Each
// iteration takes an affine-scaling predictor step and, unless the full step
// is feasible, a Mehrotra corrector that reuses the same Cholesky factor.
QuantileFit fit_qr(const Matrix& x, const Vector& y, double tau, const QrOptions& opts) {
  require_valid_tau(tau);
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "x rows differ from y length");
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (const int rank = numeric_rank(x); rank < d) {
    throw Error(ErrorCode::RankDeficient,
                "numeric rank " + std::to_string(rank) + " below d = " + std::to_string(d));
  }

  const Vector b = (1.0 - tau) * x.colwise().sum().transpose();
  const double y_sum = y.sum();

  Vector a = Vector::Constant(n, 1.0 - tau);
  Vector s = Vector::Constant(n, tau);
  Vector lambda = (x.transpose() * x).llt().solve(-(x.transpose() * y));  // = -beta_ols
  Vector resid = y + x * lambda;

  double scale = y.cwiseAbs().mean();
  if (!(scale > 0.0)) scale = 1.0;
  const double guard = 1e-6 * scale;
  Vector z(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = resid(i);
    const double pad = std::abs(r) < guard ? guard : 0.0;
    w(i) = std::max(r, 0.0) + pad;
    z(i) = std::max(-r, 0.0) + pad;
  }

  QuantileFit fit;
  fit.tau = tau;
  double best_objective = std::numeric_limits<double>::infinity();
  Vector best_lambda = lambda;
  double best_gap = std::numeric_limits<double>::infinity();

  Vector dvec(n), rd(n), da(n), ds(n), dz(n), dw(n), dr(n);
  Eigen::LLT<Matrix> chol;
  int iter = 0;
  for (;; ++iter) {
    resid.noalias() = y + x * lambda;
    const double primal = check_loss_sum(resid, tau);
    const double dual = y.dot(a) - (1.0 - tau) * y_sum;
    const double gap = primal - dual;
    if (primal < best_objective) {
      best_objective = primal;
      best_lambda = lambda;
      best_gap = gap;
    }
    const double tol = opts.relative_gap ? opts.gap_tol * (1.0 + std::abs(primal)) : opts.gap_tol;
    if (gap <= tol) {
      fit.solver.converged = true;
      best_lambda = lambda;
      best_gap = gap;
      break;
    }
    if (iter >= opts.max_iter) break;

    // Predictor.
    dvec = ((z.array() / a.array()) + (w.array() / s.array())).inverse();
    rd = z - w;
    const Vector rhs = b - x.transpose() * a + x.transpose() * dvec.cwiseProduct(rd);
    chol.compute(x.transpose() * dvec.asDiagonal() * x);
    Vector dlambda = chol.solve(rhs);
    da = dvec.cwiseProduct(x * dlambda - rd);
    ds = -da;
    dz = -z.cwiseProduct((da.cwiseQuotient(a).array() + 1.0).matrix());
    dw = -w.cwiseProduct((ds.cwiseQuotient(s).array() + 1.0).matrix());
    double step_p = damped(std::min(max_step(a, da), max_step(s, ds)));
    double step_d = damped(std::min(max_step(z, dz), max_step(w, dw)));

    // Corrector.
    if (std::min(step_p, step_d) < 1.0) {
      double mu = z.dot(a) + w.dot(s);
      const double predicted = (z + step_d * dz).dot(a + step_p * da) + (w + step_d * dw).dot(s + step_p * ds);
      mu = mu * std::pow(predicted / mu, 3) / (2.0 * static_cast<double>(n));
      dr = dvec.cwiseProduct(
          (mu * (s.cwiseInverse() - a.cwiseInverse()) + da.cwiseProduct(dz).cwiseQuotient(a) -
           ds.cwiseProduct(dw).cwiseQuotient(s)));
      dlambda = chol.solve(rhs + x.transpose() * dr);
      const Vector dadz = da.cwiseProduct(dz);
      const Vector dsdw = ds.cwiseProduct(dw);
      da = dvec.cwiseProduct(x * dlambda - z + w) - dr;
      ds = -da;
      dz = -z + (Vector::Constant(n, mu) - z.cwiseProduct(da) - dadz).cwiseQuotient(a);
      dw = -w + (Vector::Constant(n, mu) - w.cwiseProduct(ds) - dsdw).cwiseQuotient(s);
      step_p = damped(std::min(max_step(a, da), max_step(s, ds)));
      step_d = damped(std::min(max_step(z, dz), max_step(w, dw)));
    }

    a += step_p * da;
    s += step_p * ds;
    lambda += step_d * dlambda;
    z += step_d * dz;
    w += step_d * dw;
  }

  fit.beta_hat = -best_lambda;
  fit.residuals = y - x * fit.beta_hat;
  fit.objective = check_loss_sum(fit.residuals, tau);
  fit.solver.iterations = iter;
  fit.solver.duality_gap = best_gap;
  return fit;
}

QuantileFit fit_qr(const PanelArray& panel, double tau, const QrOptions& opts) {
  return fit_qr(panel.x(), panel.y(), tau, opts);
}

ScoreMatrix score_matrix(const PanelArray& panel, const Vector& beta, double tau) {
  require_valid_tau(tau);
  if (beta.size() != panel.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "beta has length " + std::to_string(beta.size()) + ", expected " + std::to_string(panel.dim()));
  }
  ScoreMatrix out;
  out.G = panel.rows();
  out.H = panel.cols();
  out.g = panel.row_index();
  out.h = panel.col_index();
  const Vector resid = panel.y() - panel.x() * beta;
  out.scores.resize(panel.size(), panel.dim());
  for (int i = 0; i < panel.size(); ++i) {
    const double weight = tau - (resid(i) <= 0.0 ? 1.0 : 0.0);
    out.scores.row(i) = weight * panel.x().row(i);
  }
  return out;
}

}  // namespace twqr
