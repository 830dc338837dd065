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

#include "skddp/ddp.hpp"
#include "skddp/problem.hpp"

namespace skddp {

/// Twice-differentiable penalty kernel
///   phi(t) = 1/2 t^2 + t          for t >= -1/2
///          = -1/4 log(-2t) - 3/8  otherwise.
struct PenaltyKernel {
  double phi;
  double dphi;
  double ddphi;
};

PenaltyKernel penalty_kernel(double t);

/// P(g) = (lambda^2/mu) phi(mu g / lambda) and its derivatives in g:
/// P' = lambda phi'(t), P'' = mu phi''(t).
struct PenaltyEval {
  double value;
  double first;
  double second;
};

PenaltyEval penalty_eval(double lambda, double mu, double g);

/// Per-timestep multiplier and penalty estimates for every constraint row.
struct PenaltyState {
  std::vector<Vec> lambda;  // horizon entries of dimension w
  std::vector<Vec> mu;
  std::vector<double> violation_history;
};

PenaltyState make_penalty_state(int horizon, int constraint_count,
                                const AlOptions& opts);

/// lambda_i <- P'(g_i, lambda_i, mu_i), clamped into the safeguard range.
void multiplier_update(PenaltyState& state,
                       const std::vector<Vec>& g_per_step,
                       const AlOptions& opts);

/// Grow every penalty when the max violation did not improve by the
/// required ratio; mu is monotone nondecreasing and capped at mu_max.
void penalty_update(PenaltyState& state, double current_violation,
                    double previous_violation, const AlOptions& opts);

/// Stage cost augmented with the smooth penalties of the constraint rows.
/// The penalty Hessian combines the Gauss-Newton term P'' grad grad' with
/// the exact constraint curvature where the model provides it.
class AugmentedCost final : public StageCost {
 public:
  AugmentedCost(const StageCost& base, const ConstraintModel& cmodel,
                const PenaltyState& pstate);

  double stage(const Vec& x, const Vec& u, int k) const override;
  CostDerivs stage_derivs(const Vec& x, const Vec& u, int k) const override;
  double terminal(const Vec& x) const override;
  ValueExpansion terminal_expansion(const Vec& x) const override;

 private:
  const StageCost& base_;
  const ConstraintModel& cmodel_;
  const PenaltyState& pstate_;
};

/// Running-cost derivatives of the augmented objective at one point.
CostDerivs augmented_cost_derivs(const StageCost& base,
                                 const ConstraintModel& cmodel,
                                 const PenaltyState& pstate, const Vec& x,
                                 const Vec& u, int k);

/// Control-limited backward pass: feedforward from the box QP on the
/// shifted limits, feedback rows of active limits zeroed.
BackwardPassResult al_backward_pass_control_limited(
    const DynamicsModel& model, const StageCost& cost,
    const Trajectory& nominal, const RegState& reg, const Vec& u_lo,
    const Vec& u_hi);

SolveResult solve_al(const Problem& problem, const SolverOptions& options,
                     std::optional<Trajectory> initial = {},
                     const ControlBox* box = nullptr);

}  // namespace skddp
