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

#include "skddp/al.hpp"

#include <chrono>
#include <cmath>

namespace skddp {

PenaltyKernel penalty_kernel(double t) {
  PenaltyKernel k;
  if (t >= -0.5) {
    k.phi = 0.5 * t * t + t;
    k.dphi = t + 1.0;
    k.ddphi = 1.0;
  } else {
    k.phi = -0.25 * std::log(-2.0 * t) - 0.375;
    k.dphi = -1.0 / (4.0 * t);
    k.ddphi = 1.0 / (4.0 * t * t);
  }
  return k;
}

PenaltyEval penalty_eval(double lambda, double mu, double g) {
  const double t = mu * g / lambda;
  const PenaltyKernel k = penalty_kernel(t);
  PenaltyEval p;
  p.value = lambda * lambda / mu * k.phi;
  p.first = lambda * k.dphi;
  p.second = mu * k.ddphi;
  return p;
}

PenaltyState make_penalty_state(int horizon, int constraint_count,
                                const AlOptions& opts) {
  PenaltyState st;
  st.lambda.assign(horizon, Vec::Constant(constraint_count, opts.lambda_init));
  st.mu.assign(horizon, Vec::Constant(constraint_count, opts.mu_init));
  return st;
}

void multiplier_update(PenaltyState& state,
                       const std::vector<Vec>& g_per_step,
                       const AlOptions& opts) {
  for (size_t k = 0; k < state.lambda.size(); ++k) {
    for (int i = 0; i < state.lambda[k].size(); ++i) {
      const PenaltyEval p =
          penalty_eval(state.lambda[k][i], state.mu[k][i], g_per_step[k][i]);
      state.lambda[k][i] =
          std::clamp(p.first, opts.lambda_min, opts.lambda_max);
    }
  }
}

void penalty_update(PenaltyState& state, double current_violation,
                    double previous_violation, const AlOptions& opts) {
  state.violation_history.push_back(current_violation);
  if (current_violation > opts.improvement_ratio * previous_violation) {
    for (auto& mu_k : state.mu) {
      mu_k = (mu_k * opts.growth).cwiseMin(opts.mu_max);
    }
  }
}

AugmentedCost::AugmentedCost(const StageCost& base,
                             const ConstraintModel& cmodel,
                             const PenaltyState& pstate)
    : base_(base), cmodel_(cmodel), pstate_(pstate) {}

double AugmentedCost::stage(const Vec& x, const Vec& u, int k) const {
  double value = base_.stage(x, u, k);
  const Vec g = cmodel_.eval(x, u);
  for (int i = 0; i < g.size(); ++i) {
    value +=
        penalty_eval(pstate_.lambda[k][i], pstate_.mu[k][i], g[i]).value;
  }
  return value;
}

CostDerivs AugmentedCost::stage_derivs(const Vec& x, const Vec& u,
                                       int k) const {
  CostDerivs d = base_.stage_derivs(x, u, k);
  const Vec g = cmodel_.eval(x, u);
  Mat gx, gu;
  cmodel_.jacobians(x, u, gx, gu);
  for (int i = 0; i < g.size(); ++i) {
    const PenaltyEval p =
        penalty_eval(pstate_.lambda[k][i], pstate_.mu[k][i], g[i]);
    d.l += p.value;
    d.lx += p.first * gx.row(i).transpose();
    d.lu += p.first * gu.row(i).transpose();
    d.lxx += p.second * gx.row(i).transpose() * gx.row(i) +
             p.first * cmodel_.row_hessian_xx(i, x, u);
    d.lux += p.second * gu.row(i).transpose() * gx.row(i);
    d.luu += p.second * gu.row(i).transpose() * gu.row(i);
  }
  return d;
}

double AugmentedCost::terminal(const Vec& x) const { return base_.terminal(x); }

ValueExpansion AugmentedCost::terminal_expansion(const Vec& x) const {
  return base_.terminal_expansion(x);
}

CostDerivs augmented_cost_derivs(const StageCost& base,
                                 const ConstraintModel& cmodel,
                                 const PenaltyState& pstate, const Vec& x,
                                 const Vec& u, int k) {
  return AugmentedCost(base, cmodel, pstate).stage_derivs(x, u, k);
}

BackwardPassResult al_backward_pass_control_limited(
    const DynamicsModel& model, const StageCost& cost,
    const Trajectory& nominal, const RegState& reg, const Vec& u_lo,
    const Vec& u_hi) {
  if (((u_hi - u_lo).array() < 0).any()) {
    throw std::invalid_argument(
        "al_backward_pass_control_limited: empty control box");
  }
  const ControlBox box{u_lo, u_hi};
  return ddp_backward_pass(model, cost, nominal, reg, &box);
}

SolveResult solve_al(const Problem& problem, const SolverOptions& options,
                     std::optional<Trajectory> initial,
                     const ControlBox* box) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
  };

  const DynamicsModel& model = *problem.dynamics;
  const StageCost& base = *problem.cost;
  const ConstraintModel* cmodel = problem.constraints.get();
  const int N = problem.horizon;

  std::vector<Vec> u_init(N, Vec::Zero(model.control_dim()));
  if (box != nullptr) {
    for (auto& u : u_init) u = u.cwiseMax(box->lo).cwiseMin(box->hi);
  }
  Trajectory traj = initial.has_value() ? std::move(*initial)
                                        : rollout(model, problem.x0, u_init);

  SolveResult result;
  Diagnostics& diag = result.report.diagnostics;

  PenaltyState pstate =
      make_penalty_state(N, cmodel != nullptr ? cmodel->count() : 0,
                         options.al);
  RegState reg = options.reg.initial();

  double cost_now = total_cost(base, traj);
  double viol_now = cmodel != nullptr ? max_violation(*cmodel, traj) : 0.0;
  double viol_prev = viol_now;
  ExitStatus status = ExitStatus::MaxIterations;
  bool converged = false;
  long inner_total = 0;
  int outer = 0;

  while (outer < options.max_outer_iterations) {
    if (elapsed() > options.time_budget_s) {
      status = ExitStatus::TimeBudget;
      break;
    }
    ++outer;

    const bool budgeted = std::isfinite(options.time_budget_s);
    const auto deadline =
        t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                 std::chrono::duration<double>(options.time_budget_s));
    DdpLoopResult loop;
    if (cmodel != nullptr) {
      const AugmentedCost aug(base, *cmodel, pstate);
      loop = run_ddp_loop(model, aug, std::move(traj), reg, options.al.max_inner,
                          options.al.inner_cost_tol, options.max_backtracks,
                          box, nullptr, "al_inner",
                          budgeted ? &deadline : nullptr);
    } else {
      loop = run_ddp_loop(model, base, std::move(traj), reg,
                          options.al.max_inner, options.al.inner_cost_tol,
                          options.max_backtracks, box, nullptr, "al_inner",
                          budgeted ? &deadline : nullptr);
    }
    traj = std::move(loop.trajectory);
    inner_total += loop.iterations;
    if (loop.status == ExitStatus::BackwardPassFailure) {
      status = ExitStatus::BackwardPassFailure;
      diag.events.push_back("al inner loop backward pass failure");
      break;
    }

    const double cost_new = total_cost(base, traj);
    const double dj = std::abs(cost_now - cost_new);
    cost_now = cost_new;
    viol_now = cmodel != nullptr ? max_violation(*cmodel, traj) : 0.0;

    if (cmodel != nullptr) {
      std::vector<Vec> g_per_step(N);
      for (int k = 0; k < N; ++k) {
        g_per_step[k] = cmodel->eval(traj.states[k], traj.controls[k]);
      }
      multiplier_update(pstate, g_per_step, options.al);
      penalty_update(pstate, viol_now, viol_prev, options.al);
      viol_prev = viol_now;
    }

    if (options.record_step_diagnostics) {
      IterationDiag rec;
      rec.iteration = static_cast<int>(diag.iterations.size());
      rec.phase = "al";
      rec.cost = cost_now;
      rec.max_violation = viol_now;
      rec.nu1 = reg.nu1;
      rec.nu2 = reg.nu2;
      rec.accepted = true;
      diag.iterations.push_back(std::move(rec));
    }

    if (dj < options.cost_change_tol && viol_now <= options.violation_tol) {
      status = ExitStatus::Converged;
      converged = true;
      break;
    }
  }

  result.trajectory = std::move(traj);
  result.report.final_cost = cost_now;
  result.report.max_violation = viol_now;
  result.report.dynamics_defect = dynamics_defect(model, result.trajectory);
  result.report.outer_iterations = outer;
  result.report.inner_iterations_total = inner_total;
  result.report.wall_seconds = elapsed();
  result.report.status = status;
  result.report.converged = converged;
  return result;
}

}  // namespace skddp
