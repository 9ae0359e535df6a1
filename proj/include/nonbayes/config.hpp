#pragma once

// Scenario configuration files (YAML, schema_version 1).
//
//   schema_version: 1
//   name: two-agents
//   hypotheses: [theta1, theta2]
//   agents:
//     - alphabet: ["0", "1"]
//       truth: [0.1, 0.9]
//       likelihood:            # l(. | theta) over the alphabet
//         theta1: [0.2, 0.8]
//         theta2: [0.9, 0.1]
//   priors: uniform            # or one probability row per agent
//   graph:
//     steps:                   # one edge list per step, repeated cyclically
//       - [[1, 2], [2, 1]]     # [from, to], 1-based
//     symmetrize: false
//     scheme: lazy_metropolis  # general | doubly_stochastic | lazy_metropolis
//     eta: 0.25                # optional; defaults to the smallest weight
//     B: 1
//     lazy_metropolis_lambda_constant: 71
//   run: {steps: 2000, trials: 500, master_seed: 7, record_every: 10,
//         rho: [0.05, 0.1, 0.2]}
//
// `graph: {builtin: paper-fig1}` selects the builtin switching topology, and
// a top-level `builtin: paper-fig1` (or the bare source name "paper-fig1")
// selects the whole builtin scenario, optionally with a `run:` override.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nonbayes/error.hpp"
#include "nonbayes/graph.hpp"
#include "nonbayes/scenario.hpp"
#include "nonbayes/theory.hpp"

namespace nonbayes {

inline constexpr int kSchemaVersion = 1;
inline constexpr double kConfigProbabilityTolerance = 1e-9;

// Parse or field error; the message carries "source:line:col: field: ...".
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct ScenarioConfig {
  Scenario scenario;
  ValidationReport graph_report;
  OptimalSets optimal_sets;
  std::vector<std::string> warnings;

  bool graph_ok() const { return graph_report.ok(); }
  bool optimal_set_nonempty() const { return optimal_sets.assumption_holds(); }
};

// Steps needed to cover every distinct step and connectivity window once.
long validation_horizon(const GraphSchedule& schedule);

// Runs the graph, optimal-set and prior validators. Throws ValidationError
// on zero likelihoods or zero priors on an optimal hypothesis; graph problems
// and an empty optimal set are recorded in the result.
ScenarioConfig validate_scenario(Scenario scenario);

ScenarioConfig parse_scenario_text(const std::string& text, const std::string& source = "<string>");
// `source` is a file path or the name of a builtin scenario.
ScenarioConfig parse_scenario(const std::string& source);

std::vector<std::string> builtin_scenario_names();

// Canonical YAML: explicit steps, 17 significant digits, fixed key order.
std::string to_canonical_yaml(const Scenario& scenario);
// FNV-1a 64 of the canonical YAML, as 16 hex digits.
std::string scenario_hash(const Scenario& scenario);

}  // namespace nonbayes
