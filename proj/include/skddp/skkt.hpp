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

/// Per-timestep slack/multiplier pair; strictly positive throughout the
/// inner iterations.
struct SlackDualState {
  Vec s;
  Vec lambda;
};

/// s_i = max(-g_i, epsilon), lambda = 1. Violated rows (g_i > 0) simply get
/// the epsilon floor, which is what lets mildly infeasible warm starts
/// through.
SlackDualState init_slack_dual(const Vec& g, double epsilon);

/// mu = s'lambda / w. Throws on w = 0.
double duality_measure(const SlackDualState& state);

/// sigma = 0.1 min(0.05 (1-xi)/xi, 2)^3 with xi = min_i s_i lambda_i / mu.
double centering(const SlackDualState& state, double mu);

struct KktStep {
  Vec du;
  Vec ds;
  Vec dlambda;
  Vec dp;  // S^-1 ds
  Vec dq;  // Lambda^-1 dlambda
};

/// Analytic solve of the rescaled KKT system on the nominal (dx = 0):
///   dq = M(E Quu^-1 a - Lambda d + b), dp = F^-1 b - dq,
///   du = Quu^-1 (a - E' dq)
/// with a = -Qu - C'lambda, b = -S lambda + mu sigma e,
/// d = -(g + S e), E = Lambda C, F = Lambda S, M = (E Quu^-1 E' + F)^-1.
KktStep solve_kkt_nominal(const QExpansion& q,
                          const ConstraintLinearization& lin,
                          const SlackDualState& state, double mu_sigma);

/// Largest alpha in (0, 1] keeping s + alpha ds and lambda + alpha dlambda
/// strictly positive, with margin zeta in [0.9, 1).
double fraction_to_boundary(const SlackDualState& state, const Vec& ds,
                            const Vec& dlambda, double zeta);

/// Shift the nominal by alpha du_prev: g += alpha C du_prev and
/// Qu += alpha Quu du_prev. C, D and Quu stay fixed inside the inner loop.
void update_nominal(ConstraintLinearization& lin, QExpansion& q, double alpha,
                    const Vec& du_prev);

struct InnerLoopResult {
  SlackDualState state;
  Vec du_accumulated;
  int iterations{0};
  double mu_ratio{0.0};
  bool capped{false};
};

/// Iterate solve / step / update until mu drops below mu_ratio_tol of its
/// initial value or the iteration cap. Mutates q (Qu) and lin (g).
InnerLoopResult skkt_inner_loop(QExpansion& q, ConstraintLinearization& lin,
                                const InteriorPointOptions& opts);

/// Constrained gains with cached intermediates:
///   k = -Quu^-1 [H Qu + E'M Lambda (g + S e)]
///   K = -Quu^-1 (H Qux + E'M Lambda D)
/// Reduces exactly to the unconstrained gains when w = 0.
struct ConstrainedGains {
  Vec k;
  Mat K;
  Mat E;
  Mat F;
  Mat M;
  Mat H;
};

ConstrainedGains constrained_gains(const QExpansion& q,
                                   const ConstraintLinearization& lin,
                                   const SlackDualState& state);

/// Per-step data stored for the forward pass. Qu and u_nominal carry the
/// inner-loop shift.
struct SkktStepData {
  Mat quu;
  Mat qux;
  Vec qu;
  Vec u_nominal;
  Vec k;
  Mat K;
};

struct SkktBackwardResult {
  std::vector<SkktStepData> steps;
  std::vector<ValueExpansion> values;  // N+1 entries
  std::vector<StepDiag> step_diags;
  bool ok{false};
  int failed_timestep{-1};
};

SkktBackwardResult skkt_backward_pass(const DynamicsModel& model,
                                      const StageCost& cost,
                                      const ConstraintModel* cmodel,
                                      const Trajectory& nominal,
                                      const RegState& reg,
                                      const InteriorPointOptions& ip);

struct SkktForwardResult {
  Trajectory trajectory;
  double cost{0.0};
  bool ok{false};
  int restarts{0};
  double delta_final{0.0};
  double box_scale_final{1.0};
  /// Cheapest complete candidate even when none was accepted; the outer
  /// loop uses it for its cost-change convergence check.
  double best_cost{std::numeric_limits<double>::infinity()};
  double alpha_final{0.0};
};

/// Feasibility-preserving forward pass: per-step inequality QPs on freshly
/// relinearized constraints inside a trust region, terminal step under a
/// box with a shrink-retry loop on the terminal state constraints. When a
/// control box is given it replaces the trust region on the controls and is
/// shrunk toward the nominal on infeasibility, restarting from t0.
///
/// The same shrink-and-restart loop doubles as the line search on the total
/// cost: a complete candidate is only returned once it beats
/// accept_cost_below (or, from an infeasible nominal, improves the
/// violation); otherwise the trust region shrinks and the rollout restarts.
SkktForwardResult skkt_forward_pass(
    const DynamicsModel& model, const StageCost& cost,
    const ConstraintModel* cmodel, const Trajectory& nominal,
    const SkktBackwardResult& bp, const TrustRegionOptions& tr,
    const ControlBox* box = nullptr,
    double accept_cost_below = std::numeric_limits<double>::infinity(),
    double nominal_violation = 0.0, double violation_tol = 1e-7);

SolveResult solve_skkt(const Problem& problem, const SolverOptions& options,
                       std::optional<Trajectory> initial = {});

/// Baseline backward pass treating near-active rows (g >= -threshold) as
/// equalities g + C du + D dx = 0; dependent rows are dropped.
SkktBackwardResult active_set_backward(const DynamicsModel& model,
                                       const StageCost& cost,
                                       const ConstraintModel* cmodel,
                                       const Trajectory& nominal,
                                       const RegState& reg,
                                       double near_active_threshold = 1e-3);

SolveResult solve_active_set(const Problem& problem,
                             const SolverOptions& options,
                             std::optional<Trajectory> initial = {});

namespace detail {

/// S-KKT phase of the hybrid: forward QPs carry the scaled control box.
SolveResult solve_skkt_with_box(const Problem& problem,
                                const SolverOptions& options,
                                std::optional<Trajectory> initial,
                                const ControlBox& box);

}  // namespace detail

}  // namespace skddp
