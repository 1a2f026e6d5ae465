#include <cmath>

#include "twqr/error.hpp"
#include "twqr/montecarlo.hpp"
#include "twqr/parallel.hpp"

namespace twqr {

ReplicationResult run_replication(const MonteCarloConfig& config, int rep) {
  ReplicationResult out;
  try {
    const PanelArray panel = generate_dgp(config, rep);
    out.fit = fit_qr(panel, config.tau);
    if (!out.fit.solver.converged) {
      out.error = "MaxIterExceeded: solver stopped after " + std::to_string(out.fit.solver.iterations) +
                  " iterations, gap " + std::to_string(out.fit.solver.duality_gap);
      return out;
    }
    out.bandwidth = rule_of_thumb_bandwidth(panel, out.fit.residuals, config.tau);
    out.jacobian = powell_jacobian(panel, out.fit.residuals, out.bandwidth.ell);
    const ScoreMatrix scores = score_matrix(panel, out.fit.beta_hat, config.tau);
    const int target = config.d - 1;
    for (CrveKind kind : config.methods) {
      out.variances.push_back(sandwich(out.jacobian, omega_variant(scores, kind), kind));
      out.tests.push_back(t_test(out.fit, out.variances.back(), target, config.null_value));
    }
    out.ok = true;
  } catch (const Error& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

RejectionReport rejection_experiment(const MonteCarloConfig& config, unsigned threads) {
  config.validate();

  struct Outcome {
    bool ok = false;
    std::vector<bool> rejected;
    std::string error;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(config.reps));
  parallel_for(outcomes.size(), threads, [&](std::size_t rep) {
    const ReplicationResult result = run_replication(config, static_cast<int>(rep));
    Outcome& slot = outcomes[rep];
    slot.ok = result.ok;
    slot.error = result.error;
    if (result.ok) {
      for (const TestResult& test : result.tests) slot.rejected.push_back(test.p_value < config.level);
    }
  });

  RejectionReport report;
  report.config = config;
  report.methods.resize(config.methods.size());
  for (std::size_t m = 0; m < config.methods.size(); ++m) report.methods[m].kind = config.methods[m];
  for (const Outcome& outcome : outcomes) {
    if (!outcome.ok) {
      ++report.failures;
      if (report.failure_messages.size() < 10) report.failure_messages.push_back(outcome.error);
      continue;
    }
    ++report.valid_reps;
    for (std::size_t m = 0; m < outcome.rejected.size(); ++m) report.methods[m].rejections += outcome.rejected[m];
  }
  report.failed = report.failures * 100 > config.reps;
  for (MethodRejection& method : report.methods) {
    if (report.valid_reps == 0) continue;
    const auto valid = static_cast<double>(report.valid_reps);
    method.frequency = method.rejections / valid;
    method.mc_se = std::sqrt(method.frequency * (1.0 - method.frequency) / valid);
  }
  return report;
}

}  // namespace twqr
