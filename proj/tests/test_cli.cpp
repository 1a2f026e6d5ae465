#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "twqr/cli.hpp"
#include "twqr/montecarlo.hpp"

using namespace twqr;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "twqr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "twqr_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("fit on a synthetic two-way panel") {
  const fs::path dir = scratch("fit");
  MonteCarloConfig c;
  write_csv(generate_dgp(c, 0), dir / "panel.csv");

  const Run r = run({"fit", (dir / "panel.csv").string(), "--crve", "ctw"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["d"] == 10);
  CHECK(doc["beta_hat"].size() == 10);
  CHECK(doc["coefficients"][0] == "const");
  REQUIRE(doc["inference"].size() == 1);
  CHECK(doc["inference"][0]["method"] == "ctw");
  for (const auto& p : doc["inference"][0]["p_values"]) {
    REQUIRE(p.is_number());
    CHECK(p.get<double>() >= 0.0);
    CHECK(p.get<double>() <= 1.0);
  }
  CHECK(doc["bandwidth"]["source"] == "rule_of_thumb");
  CHECK(doc["diagnostics"]["kernel_hits"].get<int>() > 0);

  SUBCASE("every kind, csv output, override bandwidth and per-coefficient nulls") {
    const Run all = run({"fit", (dir / "panel.csv").string(), "--crve", "ctw", "--crve", "cg", "--crve", "ch",
                         "--crve", "ci", "--crve", "ctw2", "--format", "csv", "--bandwidth", "0.4", "--null",
                         "1,1,1,1,1,1,1,1,1,1"});
    REQUIRE(all.code == 0);
    std::istringstream lines(all.out);
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) ++count;
    CHECK(count == 1 + 5 * 10);
    CHECK(all.out.rfind("method,coefficient,estimate,std_error,null_value,t_stat,p_value\n", 0) == 0);
  }

  SUBCASE("output file") {
    REQUIRE(run({"fit", (dir / "panel.csv").string(), "--out", (dir / "fit.json").string()}).code == 0);
    CHECK(json::parse(slurp(dir / "fit.json"))["tau"] == 0.5);
  }
}

TEST_CASE("fit error exits") {
  const fs::path dir = scratch("fit_errors");
  write_text(dir / "collinear.csv",
             "g,h,y,c,x1,x2\na,1,1,1,1,2\na,2,2,1,2,4\nb,1,3,1,3,6\nb,2,5,1,5,10\nc,1,2,1,1,2\nc,2,7,1,4,8\n");
  const Run collinear = run({"fit", (dir / "collinear.csv").string()});
  CHECK(collinear.code == 3);
  CHECK(collinear.err.find("RankDeficient") != std::string::npos);

  MonteCarloConfig c;
  c.G = c.H = 10;
  c.d = 3;
  write_csv(generate_dgp(c, 0), dir / "panel.csv");
  const Run tau = run({"fit", (dir / "panel.csv").string(), "--tau", "1.5"});
  CHECK(tau.code == 2);
  CHECK(tau.err.find("InvalidTau") != std::string::npos);

  CHECK(run({"fit", (dir / "missing.csv").string()}).code == 2);
  CHECK(run({"fit", (dir / "panel.csv").string(), "--crve", "bogus"}).code == 2);
  CHECK(run({"fit", (dir / "panel.csv").string(), "--format", "xml"}).code == 2);
  CHECK(run({"fit", (dir / "panel.csv").string(), "--bandwidth", "-1"}).code == 2);
  CHECK(run({"fit", (dir / "panel.csv").string(), "--null", "1,2"}).code == 2);
  CHECK(run({"fit", (dir / "panel.csv").string(), "--x-cols", "nope"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("simulate writes CSV and JSON") {
  const fs::path dir = scratch("simulate");
  write_text(dir / "smoke.json", R"({"G": 8, "H": 8, "d": 3, "reps": 1, "seed": 4})");
  const Run r = run({"simulate", (dir / "smoke.json").string(), "--out", (dir / "out" / "smoke.csv").string(),
                     "--threads", "2"});
  REQUIRE(r.code == 0);
  const std::string csv = slurp(dir / "out" / "smoke.csv");
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    const auto freq = std::stod(line.substr(0, line.rfind(',')).substr(line.substr(0, line.rfind(',')).rfind(',') + 1));
    CHECK((freq == 0.0 || freq == 1.0));
  }
  CHECK(rows == 5);
  const json report = json::parse(slurp(dir / "out" / "smoke.json"));
  CHECK(report["designs"].size() == 1);
  CHECK(report["designs"][0]["methods"].size() == 5);

  write_text(dir / "bad.json", "{\"G\": [8, ");
  CHECK(run({"simulate", (dir / "bad.json").string(), "--out", (dir / "bad.csv").string()}).code == 2);
  write_text(dir / "invalid.json", R"({"tau": 2})");
  CHECK(run({"simulate", (dir / "invalid.json").string(), "--out", (dir / "bad.csv").string()}).code == 2);
  CHECK(run({"simulate", (dir / "absent.json").string()}).code == 2);
}

TEST_CASE("simulate output is identical across worker counts") {
  const fs::path dir = scratch("threads");
  write_text(dir / "c.json", R"({"G": [10, 12], "d": 3, "reps": 12, "seed": 9})");
  std::string reference;
  for (const char* threads : {"1", "3", "4"}) {
    const fs::path out = dir / (std::string("t") + threads + ".csv");
    REQUIRE(run({"simulate", (dir / "c.json").string(), "--out", out.string(), "--threads", threads}).code == 0);
    const std::string csv = slurp(out);
    if (reference.empty()) reference = csv;
    CHECK(csv == reference);
  }
}

TEST_CASE("demo flags") {
  const fs::path dir = scratch("demo");
  CHECK(run({"demo-nongaussian", "--c", "-1", "--out", dir.string()}).code == 2);
  CHECK(run({"demo-nongaussian", "--reps", "10", "--out", dir.string()}).code == 2);
  CHECK(run({"demo-nongaussian", "--G", "x"}).code == 2);

  const std::vector<std::string> args{"demo-nongaussian", "--G", "12", "--H", "12", "--c", "1", "--reps", "500",
                                      "--seed", "5", "--threads", "2", "--out"};
  auto with_out = [&](const fs::path& out) {
    auto a = args;
    a.push_back(out.string());
    return a;
  };
  REQUIRE(run(with_out(dir / "a")).code == 0);
  REQUIRE(run(with_out(dir / "b")).code == 0);
  CHECK(slurp(dir / "a" / "samples.csv") == slurp(dir / "b" / "samples.csv"));
  const json summary = json::parse(slurp(dir / "a" / "summary.json"));
  CHECK(summary["valid_reps"] == 500);
  CHECK(summary["kappa"].get<double>() > 0.0);
  CHECK(slurp(dir / "a" / "samples.csv").rfind("empirical,reference\n", 0) == 0);
}

TEST_CASE("exit code mapping") {
  CHECK(cli::exit_code(ErrorCode::InvalidTau) == 2);
  CHECK(cli::exit_code(ErrorCode::ParseFailure) == 2);
  CHECK(cli::exit_code(ErrorCode::RankDeficient) == 3);
  CHECK(cli::exit_code(ErrorCode::SingularJacobian) == 3);
}

TEST_CASE("the installed binary reports exit codes to the shell") {
  const fs::path dir = scratch("binary");
  MonteCarloConfig c;
  c.G = c.H = 10;
  c.d = 3;
  write_csv(generate_dgp(c, 0), dir / "panel.csv");
  const std::string base = std::string(TWQR_CLI_PATH) + " fit " + (dir / "panel.csv").string();
  const int ok = std::system((base + " > " + (dir / "out.json").string()).c_str());
  CHECK(WEXITSTATUS(ok) == 0);
  const int bad = std::system((base + " --tau 1.5 2> " + (dir / "err.txt").string()).c_str());
  CHECK(WEXITSTATUS(bad) == 2);
  CHECK(slurp(dir / "err.txt").find("InvalidTau") != std::string::npos);
}
