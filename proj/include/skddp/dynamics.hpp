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

#include <vector>

#include "skddp/types.hpp"

namespace skddp {

/// Discrete-time dynamics x_{k+1} = f(x_k, u_k).
///
/// The state splits into position-like components, whose next value is a
/// function of the state alone, and velocity-like components, which also
/// depend on the control. Constraint rows on position components must be
/// propagated two steps before the control appears in their linearization.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual double dt() const = 0;

  virtual Vec step(const Vec& x, const Vec& u) const = 0;

  /// fx: n x n, fu: n x m. Default falls back to central differences.
  virtual void jacobians(const Vec& x, const Vec& u, Mat& fx, Mat& fu) const;

  /// Indices of the position-like state components (next value depends on
  /// the state only).
  virtual std::vector<int> position_indices() const = 0;

  std::vector<int> velocity_indices() const;

  /// Position-block map f^p: x_k -> x^p_{k+1}. Control-independent by
  /// contract, evaluated with a zero control.
  Vec position_step(const Vec& x) const;

  /// d x^p_{k+1} / d x_k, shape n_p x n (the position rows of fx).
  Mat position_jacobian(const Vec& x, const Vec& u) const;
};

/// Central differences with step h = 1e-6 * max(1, |component|).
void fd_jacobians(const DynamicsModel& model, const Vec& x, const Vec& u,
                  Mat& fx, Mat& fu);

/// Propagate controls from x0. The result is rollout-consistent by
/// construction. Throws RolloutDivergence naming the timestep when a
/// non-finite state appears.
Trajectory rollout(const DynamicsModel& model, const Vec& x0,
                   const std::vector<Vec>& controls);

/// max_k ||states[k+1] - f(states[k], controls[k])||_inf, recomputed from
/// the model. Zero for any trajectory produced by rollout().
double dynamics_defect(const DynamicsModel& model, const Trajectory& traj);

}  // namespace skddp
