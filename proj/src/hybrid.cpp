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

#include "skddp/hybrid.hpp"

#include <chrono>
#include <cmath>

namespace skddp {

std::string to_string(HybridPhase p) {
  switch (p) {
    case HybridPhase::Al: return "al";
    case HybridPhase::Skkt: return "skkt";
    case HybridPhase::AlFallback: return "al_fallback";
  }
  return "unknown";
}

HybridPhase switch_decision(const std::vector<IterationDiag>& history,
                            const SwitchConfig& cfg) {
  if (history.empty()) return HybridPhase::Al;
  const IterationDiag& last = history.back();

  if (last.phase != "skkt") {
    if (last.max_violation > cfg.al_violation_tol) return HybridPhase::Al;
    // Cost-change criterion needs a predecessor in the same phase.
    for (int i = static_cast<int>(history.size()) - 2; i >= 0; --i) {
      if (history[i].phase == "skkt") break;
      if (std::abs(history[i].cost - last.cost) <= cfg.al_cost_tol) {
        return HybridPhase::Skkt;
      }
      break;
    }
    return HybridPhase::Al;
  }

  // Trailing S-KKT entries without sufficient improvement in either the
  // cost or the violation trigger the fallback. An already-clean violation
  // has nothing left to improve and does not count.
  int stalls = 0;
  for (int i = static_cast<int>(history.size()) - 1; i >= 1; --i) {
    if (history[i].phase != "skkt") break;
    const IterationDiag& cur = history[i];
    const IterationDiag& prev = history[i - 1];
    const bool cost_improved =
        prev.cost - cur.cost >= cfg.cost_improvement;
    const bool viol_improved =
        prev.max_violation > 0.0 &&
        cur.max_violation <=
            (1.0 - cfg.violation_improvement_frac) * prev.max_violation;
    if (cost_improved || viol_improved) break;
    ++stalls;
  }
  return stalls >= cfg.patience ? HybridPhase::AlFallback : HybridPhase::Skkt;
}

SolveResult solve_hybrid(const Problem& problem, const Vec& u_lo,
                         const Vec& u_hi, const SolverOptions& options,
                         std::optional<Trajectory> initial) {
  if (((u_hi - u_lo).array() < 0).any()) {
    throw std::invalid_argument("solve_hybrid: empty control box");
  }
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
  };

  const ControlBox box{u_lo, u_hi};
  SwitchConfig cfg = options.hybrid;

  SolveResult result;
  Diagnostics& diag = result.report.diagnostics;

  std::vector<Vec> u_init(problem.horizon,
                          Vec::Zero(problem.dynamics->control_dim()));
  for (auto& u : u_init) u = u.cwiseMax(box.lo).cwiseMin(box.hi);
  Trajectory traj = initial.has_value()
                        ? std::move(*initial)
                        : rollout(*problem.dynamics, problem.x0, u_init);

  ExitStatus status = ExitStatus::MaxIterations;
  bool converged = false;
  long inner_total = 0;
  int total = 0;

  const ConstraintModel* cmodel = problem.constraints.get();
  // Best iterate seen at any phase boundary: feasible-and-cheapest first,
  // least-violating otherwise. Returned when the run ends without
  // converging (iteration cap, budget, phase failure).
  Trajectory best = traj;
  double best_cost = total_cost(*problem.cost, best);
  double best_viol = cmodel != nullptr ? max_violation(*cmodel, best) : 0.0;
  auto consider = [&](const Trajectory& cand) {
    const double c = total_cost(*problem.cost, cand);
    const double v = cmodel != nullptr ? max_violation(*cmodel, cand) : 0.0;
    const bool cand_feasible = v <= options.violation_tol;
    const bool best_feasible = best_viol <= options.violation_tol;
    const bool better = best_feasible
                            ? (cand_feasible && c < best_cost)
                            : (cand_feasible || v < best_viol);
    if (better) {
      best = cand;
      best_cost = c;
      best_viol = v;
    }
  };

  while (total < options.hybrid_max_total_iterations) {
    if (elapsed() > options.time_budget_s) {
      status = ExitStatus::TimeBudget;
      break;
    }
    const double remaining_budget = options.time_budget_s - elapsed();
    const int remaining_iters =
        options.hybrid_max_total_iterations - total;

    const HybridPhase phase = switch_decision(diag.iterations, cfg);

    if (phase != HybridPhase::Skkt) {
      if (phase == HybridPhase::AlFallback) {
        cfg.al_violation_tol *= cfg.tighten_factor;
        cfg.al_cost_tol *= cfg.tighten_factor;
        diag.events.push_back("fallback: skkt -> al, tolerances tightened");
      }
      SolverOptions al_opts = options;
      al_opts.violation_tol = cfg.al_violation_tol;
      al_opts.cost_change_tol = cfg.al_cost_tol;
      al_opts.max_outer_iterations =
          std::min(options.max_outer_iterations, remaining_iters);
      al_opts.time_budget_s = remaining_budget;
      SolveResult r = solve_al(problem, al_opts, std::move(traj), &box);
      traj = std::move(r.trajectory);
      consider(traj);
      total += r.report.outer_iterations;
      inner_total += r.report.inner_iterations_total;
      for (auto& it : r.report.diagnostics.iterations) {
        it.iteration = static_cast<int>(diag.iterations.size());
        diag.iterations.push_back(std::move(it));
      }
      if (r.report.status == ExitStatus::TimeBudget) {
        status = ExitStatus::TimeBudget;
        break;
      }
      if (!r.report.converged) {
        // AL could not reach the switching tolerances within its budget;
        // switch_decision keeps the phase at AL and the total cap exits.
        diag.events.push_back("al phase ended below switching tolerance");
        if (r.report.status == ExitStatus::BackwardPassFailure) {
          status = ExitStatus::BackwardPassFailure;
          break;
        }
      } else {
        diag.events.push_back("switch: al -> skkt");
      }
      continue;
    }

    SolverOptions sk_opts = options;
    sk_opts.max_outer_iterations = std::min(cfg.patience, remaining_iters);
    sk_opts.time_budget_s = remaining_budget;
    SolveResult r =
        detail::solve_skkt_with_box(problem, sk_opts, std::move(traj), box);
    traj = std::move(r.trajectory);
    consider(traj);
    total += r.report.outer_iterations;
    inner_total += r.report.inner_iterations_total;
    for (auto& it : r.report.diagnostics.iterations) {
      it.iteration = static_cast<int>(diag.iterations.size());
      it.phase = "skkt";
      diag.iterations.push_back(std::move(it));
    }
    if (r.report.converged) {
      status = ExitStatus::Converged;
      converged = true;
      break;
    }
    if (r.report.status == ExitStatus::TimeBudget) {
      status = ExitStatus::TimeBudget;
      break;
    }
    if (r.report.status == ExitStatus::ForwardPassFailure ||
        r.report.status == ExitStatus::BackwardPassFailure) {
      diag.events.push_back("skkt phase failed (" +
                            to_string(r.report.status) +
                            "), returning best iterate");
      status = r.report.status;
      break;
    }
  }

  result.trajectory = converged ? std::move(traj) : std::move(best);
  result.report.final_cost = total_cost(*problem.cost, result.trajectory);
  result.report.max_violation =
      cmodel != nullptr ? max_violation(*cmodel, result.trajectory) : 0.0;
  result.report.dynamics_defect =
      dynamics_defect(*problem.dynamics, result.trajectory);
  result.report.outer_iterations = total;
  result.report.inner_iterations_total = inner_total;
  result.report.wall_seconds = elapsed();
  result.report.status = status;
  result.report.converged = converged;
  return result;
}

}  // namespace skddp
