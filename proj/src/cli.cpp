#include "twqr/cli.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "twqr/config.hpp"
#include "twqr/crve.hpp"
#include "twqr/jacobian.hpp"
#include "twqr/montecarlo.hpp"
#include "twqr/panel.hpp"
#include "twqr/parallel.hpp"
#include "twqr/qr.hpp"

namespace twqr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised when the solver hits its iteration limit; there is no ErrorCode for it
// because the library reports it through SolverInfo rather than by throwing.
struct NotConverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitRequest {
  std::string input_path;
  double tau = 0.5;
  std::vector<std::string> crve{"ctw"};
  std::optional<double> bandwidth;
  std::vector<double> null_values;
  std::string format = "json";
  std::string out_path;
  CsvSchema schema;
};

struct SimulateRequest {
  std::string config_path;
  std::string out_path = "simulation.csv";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

struct DemoRequest {
  int G = 100;
  int H = 100;
  double c = 1.0;
  int reps = 2000;
  std::uint64_t seed = 1;
  std::string out_dir = "nongaussian";
  std::optional<int> threads;
};

void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  file << contents;
  if (!file) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(finite_or_null(v(i)));
  return out;
}

int cmd_fit(const FitRequest& req, std::ostream& out) {
  require_valid_tau(req.tau);
  std::vector<CrveKind> kinds;
  for (const std::string& name : req.crve) {
    const auto kind = parse_crve_kind(name);
    if (!kind) throw UsageError("unknown --crve kind '" + name + "' (expected ctw, cg, ch, ci or ctw2)");
    kinds.push_back(*kind);
  }
  if (req.bandwidth && !(*req.bandwidth > 0.0 && std::isfinite(*req.bandwidth))) {
    throw UsageError("--bandwidth must be a positive number");
  }

  const PanelArray panel = load_csv(req.input_path, req.schema);
  const int d = panel.dim();
  std::vector<double> nulls = req.null_values;
  if (nulls.empty()) nulls.assign(static_cast<std::size_t>(d), 0.0);
  if (nulls.size() == 1) nulls.assign(static_cast<std::size_t>(d), nulls.front());
  if (nulls.size() != static_cast<std::size_t>(d)) {
    throw UsageError("--null needs 1 or " + std::to_string(d) + " values, got " + std::to_string(nulls.size()));
  }

  const QuantileFit fit = fit_qr(panel, req.tau);
  if (!fit.solver.converged) {
    throw NotConverged("solver stopped after " + std::to_string(fit.solver.iterations) + " iterations with gap " +
                       format_double(fit.solver.duality_gap));
  }

  json bandwidth_json;
  double ell = 0;
  if (req.bandwidth) {
    ell = *req.bandwidth;
    bandwidth_json = {{"ell", ell}, {"source", "override"}};
  } else {
    const BandwidthDiagnostics bw = rule_of_thumb_bandwidth(panel, fit.residuals, req.tau);
    ell = bw.ell;
    bandwidth_json = {{"ell", ell},
                      {"source", "rule_of_thumb"},
                      {"sigma_hat", bw.sigma_hat},
                      {"alpha_tau", bw.alpha_tau},
                      {"q_norm_mean", bw.q_norm_mean},
                      {"q_mean_norm", bw.q_mean_norm}};
  }
  const JacobianEstimate jac = powell_jacobian(panel, fit.residuals, ell);
  const ScoreMatrix scores = score_matrix(panel, fit.beta_hat, req.tau);

  struct KindResult {
    VarianceEstimate var;
    std::vector<TestResult> tests;
  };
  std::vector<KindResult> results;
  for (CrveKind kind : kinds) {
    KindResult r;
    r.var = sandwich(jac, omega_variant(scores, kind), kind);
    for (int j = 0; j < d; ++j) r.tests.push_back(t_test(fit, r.var, j, nulls[static_cast<std::size_t>(j)]));
    results.push_back(std::move(r));
  }

  std::ostringstream body;
  if (req.format == "csv") {
    body << "method,coefficient,estimate,std_error,null_value,t_stat,p_value\n";
    for (const KindResult& r : results) {
      for (int j = 0; j < d; ++j) {
        const TestResult& t = r.tests[static_cast<std::size_t>(j)];
        body << to_string(r.var.kind) << ',' << panel.regressor_names()[static_cast<std::size_t>(j)] << ','
             << format_double(fit.beta_hat(j)) << ',' << format_double(r.var.std_errors(j)) << ','
             << format_double(t.null_value) << ',' << format_double(t.t_stat) << ',' << format_double(t.p_value)
             << '\n';
      }
    }
  } else {
    json inference = json::array();
    for (const KindResult& r : results) {
      json t_stats = json::array();
      json p_values = json::array();
      for (const TestResult& t : r.tests) {
        t_stats.push_back(finite_or_null(t.t_stat));
        p_values.push_back(finite_or_null(t.p_value));
      }
      inference.push_back({{"method", std::string(to_string(r.var.kind))},
                           {"std_errors", vector_json(r.var.std_errors)},
                           {"t_stats", t_stats},
                           {"p_values", p_values},
                           {"evc_clipped_I", r.var.omega.clipped_I},
                           {"evc_clipped_II", r.var.omega.clipped_II}});
    }
    const json doc = {{"tau", req.tau},
                      {"n", panel.size()},
                      {"G", panel.rows()},
                      {"H", panel.cols()},
                      {"d", d},
                      {"coefficients", panel.regressor_names()},
                      {"beta_hat", vector_json(fit.beta_hat)},
                      {"null_values", nulls},
                      {"bandwidth", bandwidth_json},
                      {"diagnostics",
                       {{"kernel_hits", jac.kernel_hits},
                        {"solver_iterations", fit.solver.iterations},
                        {"duality_gap", fit.solver.duality_gap},
                        {"objective", fit.objective}}},
                      {"inference", inference}};
    body << doc.dump(2) << '\n';
  }

  if (req.out_path.empty()) {
    out << body.str();
  } else {
    write_file(req.out_path, body.str());
  }
  return kExitOk;
}

int cmd_simulate(const SimulateRequest& req, std::ostream& out, std::ostream& err) {
  SimulationPlan plan = load_simulation_config(req.config_path);
  if (req.seed) {
    for (DesignPoint& point : plan.designs) point.config.seed = *req.seed;
  }
  const unsigned threads = resolve_threads(req.threads ? req.threads : plan.threads);

  std::vector<RejectionReport> reports;
  bool any_failed = false;
  for (const DesignPoint& point : plan.designs) {
    reports.push_back(rejection_experiment(point.config, threads));
    const RejectionReport& r = reports.back();
    if (r.failures > 0) {
      err << "warning: " << point.label << " (G=" << point.config.G << ", H=" << point.config.H << "): " << r.failures
          << " of " << point.config.reps << " replications failed\n";
      for (const std::string& msg : r.failure_messages) err << "  " << msg << '\n';
    }
    any_failed = any_failed || r.failed;
  }

  std::ostringstream csv;
  write_report_csv(csv, plan, reports);
  const fs::path csv_path(req.out_path);
  fs::path json_path = csv_path;
  json_path.replace_extension(".json");
  if (json_path == csv_path) json_path += ".json";
  write_file(csv_path, csv.str());
  write_file(json_path, report_json(plan, reports));
  out << "wrote " << csv_path.string() << " and " << json_path.string() << '\n';
  if (any_failed) {
    err << "error: more than 1% of replications failed in at least one design point\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_demo(const DemoRequest& req, std::ostream& out) {
  if (!(req.c >= 0.0)) throw UsageError("--c must be nonnegative");
  if (req.reps < 500) throw UsageError("--reps must be at least 500");
  if (req.G < 2 || req.H < 2) throw UsageError("--G and --H must be at least 2");
  const unsigned threads = resolve_threads(req.threads);
  const NonGaussianResult result = nongaussian_demo(req.G, req.H, req.c, req.reps, req.seed, threads);

  std::ostringstream csv;
  csv << "empirical,reference\n";
  for (std::size_t i = 0; i < result.empirical.size(); ++i) {
    csv << format_double(result.empirical[i]) << ',' << format_double(result.reference[i]) << '\n';
  }
  const NonGaussianSummary& s = result.summary;
  const json summary = {{"G", req.G},
                        {"H", req.H},
                        {"c", req.c},
                        {"reps", req.reps},
                        {"seed", req.seed},
                        {"valid_reps", result.empirical.size()},
                        {"failures", result.failures},
                        {"kappa", result.kappa},
                        {"mean", s.mean},
                        {"stddev", s.stddev},
                        {"kurtosis", s.kurtosis},
                        {"excess_kurtosis", s.excess_kurtosis},
                        {"ks_vs_fitted_normal", s.ks_vs_fitted_normal},
                        {"ks_vs_reference", s.ks_vs_reference}};

  const fs::path dir(req.out_dir);
  write_file(dir / "samples.csv", csv.str());
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  out << "wrote " << (dir / "samples.csv").string() << " and " << (dir / "summary.json").string() << '\n';
  return kExitOk;
}

}  // namespace

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::MissingColumn:
    case ErrorCode::ParseFailure:
    case ErrorCode::DuplicateCell:
    case ErrorCode::EmptyFile:
    case ErrorCode::InvalidTau:
    case ErrorCode::InvalidConfig:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::NonpositiveBandwidth:
    case ErrorCode::TooFewClusters:
      return kExitUsage;
    case ErrorCode::RankDeficient:
    case ErrorCode::NonFinite:
    case ErrorCode::DegenerateScale:
    case ErrorCode::DegenerateDesign:
    case ErrorCode::ZeroBias:
    case ErrorCode::SingularJacobian:
    case ErrorCode::ZeroStdError:
      return kExitNumeric;
  }
  return kExitNumeric;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantile regression with two-way cluster-robust inference"};
  app.require_subcommand(1);

  FitRequest fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a quantile regression to a long-format CSV and report inference");
  fit_cmd->add_option("input", fit.input_path, "CSV with cluster columns, response and regressors")->required();
  fit_cmd->add_option("--tau", fit.tau, "Quantile level in (0,1)")->capture_default_str();
  fit_cmd->add_option("--crve", fit.crve, "Variance estimator (repeatable): ctw, cg, ch, ci, ctw2")
      ->capture_default_str();
  fit_cmd->add_option("--bandwidth", fit.bandwidth, "Override the rule-of-thumb kernel bandwidth");
  fit_cmd->add_option("--null", fit.null_values, "Null value, one for all coefficients or one per coefficient")
      ->delimiter(',');
  fit_cmd->add_option("--format", fit.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  fit_cmd->add_option("--out", fit.out_path, "Write to this file instead of stdout");
  fit_cmd->add_option("--g-col", fit.schema.g, "Row cluster column")->capture_default_str();
  fit_cmd->add_option("--h-col", fit.schema.h, "Column cluster column")->capture_default_str();
  fit_cmd->add_option("--y-col", fit.schema.y, "Response column")->capture_default_str();
  fit_cmd->add_option("--x-cols", fit.schema.x_columns, "Regressor columns (default: all remaining)")
      ->delimiter(',');

  SimulateRequest sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run rejection-frequency experiments from a JSON config");
  sim_cmd->add_option("config", sim.config_path, "JSON config file")->required();
  sim_cmd->add_option("--out", sim.out_path, "CSV output path; the JSON report gets the same stem")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Override the config seed");
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (default: TWQR_THREADS, then all cores)");

  DemoRequest demo;
  auto* demo_cmd =
      app.add_subcommand("demo-nongaussian", "Simulate the product-normal limit of scalar median regression");
  demo_cmd->add_option("--G", demo.G, "Row clusters")->capture_default_str();
  demo_cmd->add_option("--H", demo.H, "Column clusters")->capture_default_str();
  demo_cmd->add_option("--c", demo.c, "Local drift parameter, c >= 0")->capture_default_str();
  demo_cmd->add_option("--reps", demo.reps, "Replications (at least 500)")->capture_default_str();
  demo_cmd->add_option("--seed", demo.seed, "Random seed")->capture_default_str();
  demo_cmd->add_option("--out", demo.out_dir, "Output directory")->capture_default_str();
  demo_cmd->add_option("--threads", demo.threads, "Worker threads (default: TWQR_THREADS, then all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit, out);
    if (*sim_cmd) return cmd_simulate(sim, out, err);
    if (*demo_cmd) return cmd_demo(demo, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const UsageError& e) {
    err << "error: InvalidArgument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NotConverged& e) {
    err << "error: MaxIterExceeded: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace twqr::cli
