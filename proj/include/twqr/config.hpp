#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "twqr/montecarlo.hpp"

namespace twqr {

struct DesignPoint {
  std::string label;  // from weights.label, or "design<k>"
  MonteCarloConfig config;
};

/// A simulation config after grid expansion: one entry per
/// (G, H) pair x d x weight set, in that nesting order.
struct SimulationPlan {
  std::vector<DesignPoint> designs;
  std::optional<int> threads;
};

/// Parses the JSON config document. Scalars or lists are accepted for G, H
/// (lists are paired elementwise) and d; weights is an object or a list of
/// objects. Unknown keys, bad types and invalid values raise InvalidConfig.
SimulationPlan parse_simulation_config(std::string_view text);
SimulationPlan load_simulation_config(const std::filesystem::path& path);

/// One row per (design point, method).
void write_report_csv(std::ostream& out, const SimulationPlan& plan, const std::vector<RejectionReport>& reports);
std::string report_json(const SimulationPlan& plan, const std::vector<RejectionReport>& reports);

/// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace twqr
