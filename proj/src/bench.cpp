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

#include "skddp/bench.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "skddp/al.hpp"
#include "skddp/ddp.hpp"
#include "skddp/hybrid.hpp"
#include "skddp/models.hpp"
#include "skddp/skkt.hpp"

namespace skddp {

namespace {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Vec to_vec(const json& arr, const std::string& path) {
  if (!arr.is_array()) throw ConfigError(path, "expected an array of numbers");
  Vec v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw ConfigError(path + "[" + std::to_string(i) + "]",
                        "expected a number");
    }
    v[i] = arr[i].get<double>();
  }
  return v;
}

double get_number(const json& obj, const std::string& key, double fallback,
                  const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw ConfigError(path + "." + key, "expected a number");
  return obj[key].get<double>();
}

SolverOptions parse_solver_options(const json& obj, const std::string& path) {
  SolverOptions o;
  static const std::set<std::string> known = {
      "max_outer_iterations", "cost_change_tol", "violation_tol",
      "max_backtracks", "eta", "trust_region_scale", "trust_region_floor",
      "epsilon", "zeta", "mu_ratio_tol", "max_inner", "nu_init", "nu_min",
      "nu_max", "al_growth", "al_mu_init", "al_lambda_init",
      "al_improvement_ratio", "al_inner_cost_tol", "al_max_inner",
      "patience", "al_violation_tol", "al_cost_tol",
      "hybrid_max_total_iterations"};
  for (const auto& [key, value] : obj.items()) {
    if (known.find(key) == known.end()) {
      throw ConfigError(path + "." + key, "unknown solver option");
    }
    (void)value;
  }
  o.max_outer_iterations = static_cast<int>(
      get_number(obj, "max_outer_iterations", o.max_outer_iterations, path));
  o.cost_change_tol = get_number(obj, "cost_change_tol", o.cost_change_tol, path);
  o.violation_tol = get_number(obj, "violation_tol", o.violation_tol, path);
  o.max_backtracks =
      static_cast<int>(get_number(obj, "max_backtracks", o.max_backtracks, path));
  o.tr.eta = get_number(obj, "eta", o.tr.eta, path);
  o.tr.init_scale = get_number(obj, "trust_region_scale", o.tr.init_scale, path);
  o.tr.init_floor = get_number(obj, "trust_region_floor", o.tr.init_floor, path);
  o.ip.epsilon = get_number(obj, "epsilon", o.ip.epsilon, path);
  o.ip.zeta = get_number(obj, "zeta", o.ip.zeta, path);
  o.ip.mu_ratio_tol = get_number(obj, "mu_ratio_tol", o.ip.mu_ratio_tol, path);
  o.ip.max_inner =
      static_cast<int>(get_number(obj, "max_inner", o.ip.max_inner, path));
  o.reg.nu_init = get_number(obj, "nu_init", o.reg.nu_init, path);
  o.reg.nu_min = get_number(obj, "nu_min", o.reg.nu_min, path);
  o.reg.nu_max = get_number(obj, "nu_max", o.reg.nu_max, path);
  o.al.growth = get_number(obj, "al_growth", o.al.growth, path);
  o.al.mu_init = get_number(obj, "al_mu_init", o.al.mu_init, path);
  o.al.lambda_init = get_number(obj, "al_lambda_init", o.al.lambda_init, path);
  o.al.improvement_ratio =
      get_number(obj, "al_improvement_ratio", o.al.improvement_ratio, path);
  o.al.inner_cost_tol =
      get_number(obj, "al_inner_cost_tol", o.al.inner_cost_tol, path);
  o.al.max_inner =
      static_cast<int>(get_number(obj, "al_max_inner", o.al.max_inner, path));
  o.hybrid.patience =
      static_cast<int>(get_number(obj, "patience", o.hybrid.patience, path));
  o.hybrid.al_violation_tol =
      get_number(obj, "al_violation_tol", o.hybrid.al_violation_tol, path);
  o.hybrid.al_cost_tol =
      get_number(obj, "al_cost_tol", o.hybrid.al_cost_tol, path);
  o.hybrid_max_total_iterations = static_cast<int>(get_number(
      obj, "hybrid_max_total_iterations", o.hybrid_max_total_iterations, path));
  return o;
}

BenchmarkWeights parse_cost_weights(const json& doc) {
  BenchmarkWeights w;
  if (!doc.contains("cost")) return w;
  const json& c = doc["cost"];
  w.control = get_number(c, "control_weight", w.control, "cost");
  w.state = get_number(c, "state_weight", w.state, "cost");
  w.terminal_heavy =
      get_number(c, "terminal_position_weight", w.terminal_heavy, "cost");
  w.terminal_light =
      get_number(c, "terminal_velocity_weight", w.terminal_light, "cost");
  return w;
}

}  // namespace

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(assignment, "override must look like path.to.key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  json* node = &doc;
  size_t begin = 0;
  while (true) {
    const size_t dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot - begin);
    if (key.empty()) throw ConfigError(path, "empty key in override path");

    const bool numeric =
        !key.empty() &&
        std::all_of(key.begin(), key.end(),
                    [](unsigned char c) { return std::isdigit(c); });
    if (node->is_array()) {
      if (!numeric) throw ConfigError(path, "array segment needs an index");
      const size_t idx = std::stoul(key);
      if (idx >= node->size()) {
        throw ConfigError(path, "array index out of range");
      }
      if (dot == std::string::npos) {
        json parsed = json::parse(value, nullptr, false);
        (*node)[idx] = parsed.is_discarded() ? json(value) : parsed;
        return;
      }
      node = &(*node)[idx];
    } else {
      if (dot == std::string::npos) {
        json parsed = json::parse(value, nullptr, false);
        (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
        return;
      }
      node = &(*node)[key];
    }
    begin = dot + 1;
  }
}

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig cfg;
  cfg.raw = doc;

  if (!doc.contains("model") || !doc["model"].is_object() ||
      !doc["model"].contains("name")) {
    throw ConfigError("model.name", "missing model name");
  }
  cfg.model_name = doc["model"]["name"].get<std::string>();
  static const std::set<std::string> models = {"car", "cartpole", "quadrotor"};
  if (models.find(cfg.model_name) == models.end()) {
    throw ConfigError("model.name", "unknown model '" + cfg.model_name + "'");
  }

  const double default_dt = cfg.model_name == "quadrotor" ? 0.01 : 0.02;
  cfg.dt = get_number(doc["model"], "dt", default_dt, "model");
  if (cfg.dt <= 0) throw ConfigError("model.dt", "dt must be positive");

  if (!doc.contains("horizon") || !doc["horizon"].is_number_integer()) {
    throw ConfigError("horizon", "missing integer horizon");
  }
  cfg.horizon = doc["horizon"].get<int>();
  if (cfg.horizon < 2) throw ConfigError("horizon", "horizon must be >= 2");

  cfg.constraints_enabled =
      doc.contains("constraints") ? doc["constraints"].get<bool>() : true;

  if (doc.contains("starts")) {
    if (!doc["starts"].is_array() || doc["starts"].empty()) {
      throw ConfigError("starts", "expected a nonempty array of states");
    }
    for (size_t i = 0; i < doc["starts"].size(); ++i) {
      cfg.starts.push_back(
          to_vec(doc["starts"][i], "starts[" + std::to_string(i) + "]"));
    }
  } else {
    if (cfg.model_name == "car") cfg.starts = car_benchmark_starts();
    if (cfg.model_name == "quadrotor") cfg.starts = quadrotor_benchmark_starts();
    if (cfg.model_name == "cartpole") {
      cfg.starts = {cart_pole_benchmark_start()};
    }
  }

  if (!doc.contains("solvers") || !doc["solvers"].is_array() ||
      doc["solvers"].empty()) {
    throw ConfigError("solvers", "expected a nonempty solver list");
  }
  static const std::set<std::string> solver_names = {"ddp", "skkt", "al",
                                                     "active_set", "hybrid"};
  for (size_t i = 0; i < doc["solvers"].size(); ++i) {
    const json& s = doc["solvers"][i];
    const std::string path = "solvers[" + std::to_string(i) + "]";
    if (!s.is_object() || !s.contains("name")) {
      throw ConfigError(path + ".name", "missing solver name");
    }
    SolverSpec spec;
    spec.name = s["name"].get<std::string>();
    if (solver_names.find(spec.name) == solver_names.end()) {
      throw ConfigError(path + ".name", "unknown solver '" + spec.name + "'");
    }
    spec.options = s.contains("options")
                       ? parse_solver_options(s["options"], path + ".options")
                       : SolverOptions{};
    cfg.solvers.push_back(std::move(spec));
  }

  if (doc.contains("budget_seconds")) {
    const double b = doc["budget_seconds"].get<double>();
    if (b <= 0) throw ConfigError("budget_seconds", "budget must be positive");
    cfg.budget_seconds = b;
  }

  if (doc.contains("control_box")) {
    const json& cb = doc["control_box"];
    if (!cb.contains("lo") || !cb.contains("hi")) {
      throw ConfigError("control_box", "needs lo and hi arrays");
    }
    cfg.control_box = {to_vec(cb["lo"], "control_box.lo"),
                       to_vec(cb["hi"], "control_box.hi")};
  }
  for (const auto& s : cfg.solvers) {
    if (s.name == "hybrid" && !cfg.control_box.has_value()) {
      throw ConfigError("control_box", "hybrid solver requires a control box");
    }
  }

  cfg.seed = doc.contains("seed") ? doc["seed"].get<uint64_t>() : 0;
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path,
                                  const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  json doc = json::parse(in);
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(doc);
}

Problem build_problem(const ExperimentConfig& config, const Vec& start) {
  const json& mdl = config.raw["model"];
  const BenchmarkWeights weights = parse_cost_weights(config.raw);
  Problem p;
  p.horizon = config.horizon;

  if (config.model_name == "car") {
    p.dynamics = std::make_shared<CarModel>(config.dt);
    p.cost = car_benchmark_cost(weights);
    if (config.constraints_enabled) {
      const double radius = get_number(mdl, "obstacle_radius", 0.5, "model");
      p.constraints = std::make_shared<ObstacleConstraints>(
          car_benchmark_obstacles(radius), 4, 2);
    }
  } else if (config.model_name == "cartpole") {
    p.dynamics = std::make_shared<CartPoleModel>(config.dt);
    p.cost = cart_pole_benchmark_cost(weights);
    if (config.constraints_enabled) {
      const double x_lim = get_number(mdl, "x_lim", cart_pole_x_lim(), "model");
      const double theta_lim =
          get_number(mdl, "theta_lim", cart_pole_theta_lim(), "model");
      p.constraints = std::make_shared<CartPoleLimits>(x_lim, theta_lim);
    }
  } else {
    auto model = std::make_shared<QuadrotorModel>(config.dt);
    p.dynamics = model;
    p.cost = quadrotor_benchmark_cost(weights);
    if (config.constraints_enabled) {
      p.constraints = std::make_shared<ObstacleConstraints>(
          quadrotor_benchmark_obstacles(), 12, 4);
    }
  }

  if (start.size() != p.dynamics->state_dim()) {
    throw ConfigError("starts", "start state dimension mismatch for model '" +
                                    config.model_name + "'");
  }
  p.x0 = start;
  return p;
}

std::vector<CellResult> run_experiment(const ExperimentConfig& config) {
  std::vector<CellResult> cells;
  for (const auto& spec : config.solvers) {
    for (size_t si = 0; si < config.starts.size(); ++si) {
      CellResult cell;
      cell.solver = spec.name;
      cell.start_index = static_cast<int>(si);
      try {
        Problem problem = build_problem(config, config.starts[si]);
        SolverOptions opts = spec.options;
        if (config.budget_seconds.has_value()) {
          opts.time_budget_s = *config.budget_seconds;
        }
        // Quadrotor runs start from a hover rollout; a zero-control
        // nominal free-falls out of the constraint region.
        std::optional<Trajectory> init;
        if (config.model_name == "quadrotor") {
          const auto* quad =
              dynamic_cast<const QuadrotorModel*>(problem.dynamics.get());
          init = rollout(*problem.dynamics, problem.x0,
                         std::vector<Vec>(problem.horizon,
                                          quad->hover_control()));
        }
        SolveResult r;
        if (spec.name == "ddp") {
          Problem unconstrained = problem;
          unconstrained.constraints.reset();
          r = solve_unconstrained(unconstrained, opts, init);
        } else if (spec.name == "skkt") {
          r = solve_skkt(problem, opts, init);
        } else if (spec.name == "al") {
          r = solve_al(problem, opts, init);
        } else if (spec.name == "active_set") {
          r = solve_active_set(problem, opts, init);
        } else {
          r = solve_hybrid(problem, config.control_box->first,
                           config.control_box->second, opts, init);
        }
        cell.report = std::move(r.report);
        cell.trajectory = std::move(r.trajectory);
        // The harness recomputes both feasibility metrics from the returned
        // trajectory.
        cell.report.dynamics_defect =
            dynamics_defect(*problem.dynamics, cell.trajectory);
        cell.report.max_violation =
            problem.constraints
                ? max_violation(*problem.constraints, cell.trajectory)
                : 0.0;
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

void emit_metrics(const ExperimentConfig& config,
                  const std::vector<CellResult>& cells,
                  const std::string& out_dir) {
  if (cells.empty()) throw std::invalid_argument("emit_metrics: no reports");

  std::ofstream csv(out_dir + "/metrics.csv");
  csv << "solver,start,cost,time_seconds,feas_g,feas_f,converged,status\n";
  for (const auto& c : cells) {
    csv << c.solver << "," << c.start_index << ",";
    if (c.failed) {
      csv << "N/A,N/A,N/A,N/A,false,failed\n";
      continue;
    }
    csv << fmt17(c.report.final_cost) << "," << fmt17(c.report.wall_seconds)
        << "," << fmt17(c.report.max_violation) << ","
        << fmt17(c.report.dynamics_defect) << ","
        << (c.report.converged ? "true" : "false") << ","
        << to_string(c.report.status) << "\n";
  }

  // Per-solver averages over starts.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const CellResult*>> by_solver;
  for (const auto& c : cells) {
    if (by_solver.find(c.solver) == by_solver.end()) order.push_back(c.solver);
    by_solver[c.solver].push_back(&c);
  }
  for (const auto& name : order) {
    const auto& group = by_solver[name];
    int ok = 0;
    double cost = 0, time = 0, fg = 0, ff = 0;
    for (const auto* c : group) {
      if (c->failed) continue;
      ++ok;
      cost += c->report.final_cost;
      time += c->report.wall_seconds;
      fg += c->report.max_violation;
      ff += c->report.dynamics_defect;
    }
    csv << name << ",avg,";
    if (ok == 0) {
      csv << "N/A,N/A,N/A,N/A,false,failed\n";
    } else {
      csv << fmt17(cost / ok) << "," << fmt17(time / ok) << ","
          << fmt17(fg / ok) << "," << fmt17(ff / ok) << ",,\n";
    }
  }
  csv.close();

  std::ofstream txt(out_dir + "/metrics.txt");
  txt << "Model: " << config.model_name << "  H = " << config.horizon
      << "  dt = " << config.dt << "\n\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-12s %12s %12s %12s %12s\n", "Solver",
                "Cost", "Time", "Feas. g", "Feas. f");
  txt << line;
  for (const auto& name : order) {
    const auto& group = by_solver[name];
    int ok = 0;
    double cost = 0, time = 0, fg = 0, ff = 0;
    for (const auto* c : group) {
      if (c->failed) continue;
      ++ok;
      cost += c->report.final_cost;
      time += c->report.wall_seconds;
      fg += c->report.max_violation;
      ff += c->report.dynamics_defect;
    }
    if (ok == 0) {
      std::snprintf(line, sizeof(line), "%-12s %12s %12s %12s %12s\n",
                    name.c_str(), "N/A", "N/A", "N/A", "N/A");
    } else {
      std::snprintf(line, sizeof(line), "%-12s %12.4g %12.4g %12.3g %12.3g\n",
                    name.c_str(), cost / ok, time / ok, fg / ok, ff / ok);
    }
    txt << line;
  }
}

void emit_trajectory(const Trajectory& traj, const ConstraintModel* cmodel,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_trajectory: cannot open " + path);
  const int n = static_cast<int>(traj.states.front().size());
  const int m = traj.controls.empty()
                    ? 0
                    : static_cast<int>(traj.controls.front().size());
  const int w = cmodel != nullptr ? cmodel->count() : 0;

  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= m; ++i) out << ",u" << i;
  for (int i = 1; i <= w; ++i) out << ",g" << i;
  out << "\n";

  for (size_t k = 0; k < traj.states.size(); ++k) {
    out << fmt17(static_cast<double>(k) * traj.dt);
    for (int i = 0; i < n; ++i) out << "," << fmt17(traj.states[k][i]);
    const Vec u = k < traj.controls.size() ? traj.controls[k] : Vec::Zero(m);
    for (int i = 0; i < m; ++i) out << "," << fmt17(u[i]);
    if (w > 0) {
      const Vec g = cmodel->eval(traj.states[k], u);
      for (int i = 0; i < w; ++i) out << "," << fmt17(g[i]);
    }
    out << "\n";
  }
}

nlohmann::json diagnostics_to_json(const Diagnostics& diag) {
  json out;
  out["events"] = diag.events;
  out["iterations"] = json::array();
  for (const auto& it : diag.iterations) {
    json rec;
    rec["iteration"] = it.iteration;
    rec["phase"] = it.phase;
    rec["cost"] = it.cost;
    rec["max_violation"] = it.max_violation;
    rec["nu1"] = it.nu1;
    rec["nu2"] = it.nu2;
    rec["accepted"] = it.accepted;
    if (!it.steps.empty()) {
      json steps = json::array();
      for (const auto& s : it.steps) {
        steps.push_back({{"timestep", s.timestep},
                         {"constraint_rows", s.constraint_rows},
                         {"inner_iterations", s.inner_iterations},
                         {"mu_ratio", s.mu_ratio},
                         {"min_slack", s.min_slack},
                         {"min_lambda", s.min_lambda},
                         {"capped", s.capped}});
      }
      rec["steps"] = std::move(steps);
    }
    out["iterations"].push_back(std::move(rec));
  }
  return out;
}

nlohmann::json report_to_json(const SolverReport& report) {
  json out;
  out["final_cost"] = report.final_cost;
  out["max_violation"] = report.max_violation;
  out["dynamics_defect"] = report.dynamics_defect;
  out["outer_iterations"] = report.outer_iterations;
  out["inner_iterations_total"] = report.inner_iterations_total;
  out["wall_seconds"] = report.wall_seconds;
  out["status"] = to_string(report.status);
  out["converged"] = report.converged;
  out["diagnostics"] = diagnostics_to_json(report.diagnostics);
  return out;
}

}  // namespace skddp
