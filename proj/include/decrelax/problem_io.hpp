#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "decrelax/bounds.hpp"
#include "decrelax/disturbance.hpp"
#include "decrelax/info_graph.hpp"
#include "decrelax/ltv_system.hpp"

namespace decrelax {

struct ProblemOptions {
  double tol = 1e-8;
  std::uint64_t seed = 20250101;
  long samples = 100000;
  double tau_z = kDefaultTauZ;
  std::optional<InfoGraph> upper_graph;
};

// Fully expanded and validated problem instance (all shorthands resolved).
struct Problem {
  LtvSystem sys;
  InfoGraph graph;
  DisturbanceModel dist;
  ConstraintData cons;
  CostData cost;
  ProblemOptions options;
};

// Throws SchemaError on malformed input; AssumptionError and
// NotPositiveDefiniteError propagate from graph/disturbance validation.
Problem parse_problem(const nlohmann::json& j);
Problem load_problem(const std::string& path);

}  // namespace decrelax
