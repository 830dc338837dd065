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

#include <chrono>
#include <optional>

#include "skddp/problem.hpp"

namespace skddp {

/// Q_k expansion from stage-cost derivatives, dynamics Jacobians and the
/// next-step value expansion. Qxu is recovered as the transpose of Qux.
QExpansion q_expansion(const CostDerivs& d, const Mat& fx, const Mat& fu,
                       const ValueExpansion& next);

/// Thrown by regularized_q when Quu stays indefinite; the caller reacts by
/// raising the regularizers and retrying.
class QuuNotPositiveDefinite : public std::runtime_error {
 public:
  explicit QuuNotPositiveDefinite(int timestep_)
      : std::runtime_error("Quu not positive definite at step " +
                           std::to_string(timestep_)),
        timestep(timestep_) {}
  int timestep;
};

/// Regularized expansion:
///   Qxx = lxx + fx'(Vxx + nu1 I)fx
///   Qux = lux + fu'(Vxx + nu1 I)fx
///   Quu = luu + fu'(Vxx + nu1 I)fu + nu2 I
/// Throws QuuNotPositiveDefinite when the result fails a Cholesky check.
QExpansion regularized_q(const CostDerivs& d, const Mat& fx, const Mat& fu,
                         const ValueExpansion& next, const RegState& reg,
                         int timestep = -1);

/// k = -Quu^-1 Qu, K = -Quu^-1 Qux (Quu must be positive definite).
Gains unconstrained_gains(const QExpansion& q);

/// Gain-form value update; Vxx is symmetrized before return.
ValueExpansion value_recursion(const QExpansion& q, const Vec& k,
                               const Mat& K);

/// Accepted steps shrink both regularizers, rejected steps grow them; both
/// stay clamped to [nu_min, nu_max].
RegState regularization_schedule(RegState reg, bool accepted);

struct BackwardPassResult {
  GainSchedule gains;
  double dv1{0.0};  // sum k'Qu
  double dv2{0.0};  // sum 1/2 k'Quu k
  bool ok{false};
  int failed_timestep{-1};
};

/// Optional per-step control box for the control-limited variant: the
/// feedforward comes from a box QP and feedback rows of active limits are
/// zeroed.
struct ControlBox {
  Vec lo;
  Vec hi;
};

BackwardPassResult ddp_backward_pass(const DynamicsModel& model,
                                     const StageCost& cost,
                                     const Trajectory& nominal,
                                     const RegState& reg,
                                     const ControlBox* box = nullptr);

struct ForwardPassResult {
  Trajectory trajectory;
  double cost{0.0};
  bool ok{false};
};

/// u_k = u_nom_k + alpha k_k + K_k (x_k - x_nom_k); when a box is supplied
/// controls are clamped into it so limits hold exactly.
ForwardPassResult ddp_forward_pass(const DynamicsModel& model,
                                   const StageCost& cost,
                                   const Trajectory& nominal,
                                   const GainSchedule& gains, double alpha,
                                   const ControlBox* box = nullptr);

/// Core unconstrained loop shared by the plain solver and the augmented
/// Lagrangian inner stage. Exits on |dJ| < cost_change_tol over accepted
/// iterations or after max_iterations.
struct DdpLoopResult {
  Trajectory trajectory;
  double cost{0.0};
  int iterations{0};
  ExitStatus status{ExitStatus::MaxIterations};
  bool converged{false};
};

DdpLoopResult run_ddp_loop(const DynamicsModel& model, const StageCost& cost,
                           Trajectory initial, RegState& reg,
                           int max_iterations, double cost_change_tol,
                           int max_backtracks, const ControlBox* box = nullptr,
                           Diagnostics* diag = nullptr,
                           const char* phase = "ddp",
                           const std::chrono::steady_clock::time_point*
                               deadline = nullptr);

SolveResult solve_unconstrained(const Problem& problem,
                                const SolverOptions& options,
                                std::optional<Trajectory> initial = {});

}  // namespace skddp
