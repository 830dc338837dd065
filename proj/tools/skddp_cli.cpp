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

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "skddp/bench.hpp"
#include "skddp/models.hpp"

namespace {

using skddp::CellResult;
using skddp::ExperimentConfig;

int emit_all(const ExperimentConfig& config,
             const std::vector<CellResult>& cells, const std::string& out_dir,
             bool per_start_trajectories) {
  std::filesystem::create_directories(out_dir);
  skddp::emit_metrics(config, cells, out_dir);

  nlohmann::json diags = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json entry;
    entry["solver"] = c.solver;
    entry["start"] = c.start_index;
    if (c.failed) {
      entry["failed"] = true;
      entry["error"] = c.error;
    } else {
      entry["report"] = skddp::report_to_json(c.report);
    }
    diags.push_back(std::move(entry));
  }
  std::ofstream(out_dir + "/diagnostics.json") << diags.dump(2) << "\n";

  if (per_start_trajectories) {
    for (const auto& c : cells) {
      if (c.failed) continue;
      skddp::Problem p = build_problem(config, config.starts[c.start_index]);
      const std::string path = out_dir + "/traj_" + c.solver + "_start" +
                               std::to_string(c.start_index) + ".csv";
      skddp::emit_trajectory(c.trajectory, p.constraints.get(), path);
    }
  }

  bool any_failed = false;
  for (const auto& c : cells) {
    if (c.failed || !c.report.converged) {
      std::cerr << c.solver << " start " << c.start_index << ": "
                << (c.failed ? "FAILED: " + c.error
                             : "not converged (" +
                                   skddp::to_string(c.report.status) + ")")
                << "\n";
    }
    any_failed = any_failed || c.failed;
  }
  return any_failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained trajectory optimization benchmarks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  double budget = 0.0;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* cmd, bool budget_flag) {
    cmd->add_option("--config", config_path, "JSON experiment config")
        ->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--set", overrides,
                    "dot-path config overrides, e.g. model.dt=0.01");
    if (budget_flag) {
      cmd->add_option("--budget", budget, "time budget in seconds per run");
    }
  };

  CLI::App* solve = app.add_subcommand(
      "solve", "run the first configured solver on the first start");
  add_common(solve, true);

  CLI::App* bench = app.add_subcommand(
      "bench", "run the full solver x start matrix and emit metrics");
  add_common(bench, true);

  CLI::App* sweep = app.add_subcommand(
      "sweep-starts", "bench plus per-start trajectory CSV export");
  add_common(sweep, true);

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig config = skddp::load_config_file(config_path, overrides);
    if (budget > 0.0) config.budget_seconds = budget;

    if (solve->parsed()) {
      config.starts.resize(1);
      config.solvers.resize(1);
      const std::vector<CellResult> cells = skddp::run_experiment(config);
      const int rc = emit_all(config, cells, out_dir, true);
      if (!cells.front().failed) {
        const auto& r = cells.front().report;
        std::cout << "cost " << r.final_cost << "  feas_g "
                  << r.max_violation << "  feas_f " << r.dynamics_defect
                  << "  iters " << r.outer_iterations << "  time "
                  << r.wall_seconds << "s  status " << to_string(r.status)
                  << "\n";
      }
      return rc;
    }

    const std::vector<CellResult> cells = skddp::run_experiment(config);
    return emit_all(config, cells, out_dir, sweep->parsed());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
