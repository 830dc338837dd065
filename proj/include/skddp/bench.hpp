/*
 Copyright 2026 The skddp authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "skddp/problem.hpp"

namespace skddp {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : std::runtime_error(path + ": " + message), field_path(path) {}
  std::string field_path;
};

struct SolverSpec {
  std::string name;  // ddp | skkt | al | active_set | hybrid
  SolverOptions options;
};

struct ExperimentConfig {
  nlohmann::json raw;
  std::string model_name;
  double dt{0.0};
  int horizon{0};
  bool constraints_enabled{true};
  std::vector<Vec> starts;
  std::vector<SolverSpec> solvers;
  std::optional<double> budget_seconds;
  std::optional<std::pair<Vec, Vec>> control_box;
  uint64_t seed{0};
};

/// Apply one dotted override "a.b.c=value" to a JSON document. Values parse
/// as JSON when possible and fall back to strings.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Validate and resolve a config document. Throws ConfigError carrying the
/// offending field path.
ExperimentConfig parse_config(const nlohmann::json& doc);

ExperimentConfig load_config_file(const std::string& path,
                                  const std::vector<std::string>& overrides);

/// Model, cost and constraints for one start state.
Problem build_problem(const ExperimentConfig& config, const Vec& start);

struct CellResult {
  std::string solver;
  int start_index{0};
  SolverReport report;
  Trajectory trajectory;
  bool failed{false};
  std::string error;
};

/// One report per start per solver. Feas. g and Feas. f are recomputed by
/// the harness from the returned trajectory, never trusted from the solver.
/// Solver exceptions are recorded per cell, not fatal to the matrix.
std::vector<CellResult> run_experiment(const ExperimentConfig& config);

/// metrics.csv (one row per cell plus per-solver averages, 17 significant
/// digits) and metrics.txt (aligned table).
void emit_metrics(const ExperimentConfig& config,
                  const std::vector<CellResult>& cells,
                  const std::string& out_dir);

/// CSV with columns t, x1..xn, u1..um, g1..gw; one row per timestep, values
/// printed with 17 significant digits so states re-import bit-exact.
void emit_trajectory(const Trajectory& traj, const ConstraintModel* cmodel,
                     const std::string& path);

nlohmann::json diagnostics_to_json(const Diagnostics& diag);

nlohmann::json report_to_json(const SolverReport& report);

}  // namespace skddp
