#include "twqr/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "twqr/error.hpp"

namespace twqr {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

int as_int(const json& value, const char* key) {
  if (!value.is_number_integer()) fail(std::string("'") + key + "' must be an integer");
  const auto v = value.get<long long>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    fail(std::string("'") + key + "' is out of range");
  }
  return static_cast<int>(v);
}

double as_double(const json& value, const char* key) {
  if (!value.is_number()) fail(std::string("'") + key + "' must be a number");
  const double v = value.get<double>();
  if (!std::isfinite(v)) fail(std::string("'") + key + "' must be finite");
  return v;
}

std::vector<int> int_list(const json& value, const char* key) {
  std::vector<int> out;
  if (value.is_array()) {
    if (value.empty()) fail(std::string("'") + key + "' must not be empty");
    for (const json& item : value) out.push_back(as_int(item, key));
  } else {
    out.push_back(as_int(value, key));
  }
  return out;
}

struct WeightSet {
  std::string label;
  DgpWeights weights;
};

WeightSet parse_weights(const json& value) {
  if (!value.is_object()) fail("'weights' entries must be objects");
  WeightSet out;
  for (const auto& [key, item] : value.items()) {
    if (key == "label") {
      if (!item.is_string()) fail("'weights.label' must be a string");
      out.label = item.get<std::string>();
    } else if (key == "wUx") {
      out.weights.wUx = as_double(item, "wUx");
    } else if (key == "wVx") {
      out.weights.wVx = as_double(item, "wVx");
    } else if (key == "wWx") {
      out.weights.wWx = as_double(item, "wWx");
    } else if (key == "wUe") {
      out.weights.wUe = as_double(item, "wUe");
    } else if (key == "wVe") {
      out.weights.wVe = as_double(item, "wVe");
    } else if (key == "wWe") {
      out.weights.wWe = as_double(item, "wWe");
    } else {
      fail("unknown weights key '" + key + "'");
    }
  }
  return out;
}

SimulationPlan build_plan(const json& doc) {
  if (!doc.is_object()) fail("config must be a JSON object");
  static const std::set<std::string> known{"G",      "H",      "d",          "tau",   "weights", "reps",
                                           "seed",   "methods", "null_value", "level", "threads"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) fail("unknown config key '" + key + "'");
  }

  MonteCarloConfig base;
  if (doc.contains("tau")) base.tau = as_double(doc["tau"], "tau");
  if (doc.contains("reps")) base.reps = as_int(doc["reps"], "reps");
  if (doc.contains("seed")) {
    const json& s = doc["seed"];
    if (!s.is_number_unsigned()) fail("'seed' must be a nonnegative integer");
    base.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("null_value")) base.null_value = as_double(doc["null_value"], "null_value");
  if (doc.contains("level")) base.level = as_double(doc["level"], "level");
  if (doc.contains("methods")) {
    const json& m = doc["methods"];
    if (!m.is_array()) fail("'methods' must be a list of method names");
    base.methods.clear();
    for (const json& item : m) {
      if (!item.is_string()) fail("'methods' entries must be strings");
      const auto kind = parse_crve_kind(item.get<std::string>());
      if (!kind) fail("unknown method '" + item.get<std::string>() + "'");
      base.methods.push_back(*kind);
    }
  }

  std::vector<int> Gs = doc.contains("G") ? int_list(doc["G"], "G") : std::vector<int>{base.G};
  std::vector<int> Hs = doc.contains("H") ? int_list(doc["H"], "H") : Gs;
  if (Gs.size() != Hs.size()) {
    if (Gs.size() == 1) {
      Gs.assign(Hs.size(), Gs.front());
    } else if (Hs.size() == 1) {
      Hs.assign(Gs.size(), Hs.front());
    } else {
      fail("'G' and 'H' lists must have the same length");
    }
  }
  const std::vector<int> ds = doc.contains("d") ? int_list(doc["d"], "d") : std::vector<int>{base.d};

  std::vector<WeightSet> weight_sets;
  if (doc.contains("weights")) {
    const json& w = doc["weights"];
    if (w.is_array()) {
      if (w.empty()) fail("'weights' must not be empty");
      for (const json& item : w) weight_sets.push_back(parse_weights(item));
    } else {
      weight_sets.push_back(parse_weights(w));
    }
  } else {
    weight_sets.push_back({});
  }

  SimulationPlan plan;
  if (doc.contains("threads")) {
    plan.threads = as_int(doc["threads"], "threads");
    if (*plan.threads < 1) fail("'threads' must be positive");
  }
  for (std::size_t k = 0; k < Gs.size(); ++k) {
    for (int d : ds) {
      for (std::size_t wi = 0; wi < weight_sets.size(); ++wi) {
        DesignPoint point;
        point.config = base;
        point.config.G = Gs[k];
        point.config.H = Hs[k];
        point.config.d = d;
        point.config.weights = weight_sets[wi].weights;
        point.label = weight_sets[wi].label.empty() ? "design" + std::to_string(wi) : weight_sets[wi].label;
        point.config.validate();
        plan.designs.push_back(std::move(point));
      }
    }
  }
  return plan;
}

json config_json(const DesignPoint& point) {
  const MonteCarloConfig& c = point.config;
  json methods = json::array();
  for (CrveKind kind : c.methods) methods.push_back(std::string(to_string(kind)));
  return {{"label", point.label},
          {"G", c.G},
          {"H", c.H},
          {"d", c.d},
          {"tau", c.tau},
          {"weights",
           {{"wUx", c.weights.wUx},
            {"wVx", c.weights.wVx},
            {"wWx", c.weights.wWx},
            {"wUe", c.weights.wUe},
            {"wVe", c.weights.wVe},
            {"wWe", c.weights.wWe}}},
          {"reps", c.reps},
          {"seed", c.seed},
          {"methods", methods},
          {"null_value", c.null_value},
          {"level", c.level}};
}

}  // namespace

SimulationPlan parse_simulation_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  return build_plan(doc);
}

SimulationPlan load_simulation_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_simulation_config(buffer.str());
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void write_report_csv(std::ostream& out, const SimulationPlan& plan, const std::vector<RejectionReport>& reports) {
  out << "label,G,H,d,tau,wUx,wVx,wWx,wUe,wVe,wWe,reps,seed,method,rejections,valid_reps,failures,frequency,mc_se\n";
  for (std::size_t k = 0; k < reports.size() && k < plan.designs.size(); ++k) {
    const MonteCarloConfig& c = plan.designs[k].config;
    const RejectionReport& r = reports[k];
    for (const MethodRejection& m : r.methods) {
      out << plan.designs[k].label << ',' << c.G << ',' << c.H << ',' << c.d << ',' << format_double(c.tau) << ','
          << format_double(c.weights.wUx) << ',' << format_double(c.weights.wVx) << ','
          << format_double(c.weights.wWx) << ',' << format_double(c.weights.wUe) << ','
          << format_double(c.weights.wVe) << ',' << format_double(c.weights.wWe) << ',' << c.reps << ',' << c.seed
          << ',' << to_string(m.kind) << ',' << m.rejections << ',' << r.valid_reps << ',' << r.failures << ','
          << format_double(m.frequency) << ',' << format_double(m.mc_se) << '\n';
    }
  }
}

std::string report_json(const SimulationPlan& plan, const std::vector<RejectionReport>& reports) {
  json designs = json::array();
  for (std::size_t k = 0; k < reports.size() && k < plan.designs.size(); ++k) {
    const RejectionReport& r = reports[k];
    json methods = json::array();
    for (const MethodRejection& m : r.methods) {
      methods.push_back({{"method", std::string(to_string(m.kind))},
                         {"rejections", m.rejections},
                         {"frequency", m.frequency},
                         {"mc_se", m.mc_se}});
    }
    designs.push_back({{"config", config_json(plan.designs[k])},
                       {"valid_reps", r.valid_reps},
                       {"failures", r.failures},
                       {"failed", r.failed},
                       {"failure_messages", r.failure_messages},
                       {"methods", methods}});
  }
  return json{{"designs", designs}}.dump(2) + "\n";
}

}  // namespace twqr
