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

#include "skddp/dynamics.hpp"
#include "skddp/types.hpp"

namespace skddp {

enum class ConstraintKind { Position, Velocity, Control };

/// Inequality constraints g(x, u) <= 0, rows ordered position, then
/// velocity, then control.
///
/// Position rows depend only on position-like state components, velocity
/// rows on the state, control rows may involve the control. Evaluators must
/// accept a zero control so state-only rows can be queried at states without
/// an attached control.
class ConstraintModel {
 public:
  virtual ~ConstraintModel() = default;

  virtual int count() const = 0;
  virtual ConstraintKind kind(int row) const = 0;
  virtual Vec eval(const Vec& x, const Vec& u) const = 0;
  virtual void jacobians(const Vec& x, const Vec& u, Mat& gx,
                         Mat& gu) const = 0;

  /// d^2 g_row / dx^2. Zero by default (Gauss-Newton curvature); quadratic
  /// rows like sphere obstacles override with the exact constant Hessian.
  virtual Mat row_hessian_xx(int row, const Vec& x, const Vec& u) const;

  int count_of(ConstraintKind k) const;
  std::vector<int> rows_of(ConstraintKind k) const;

  /// max_i max(0, g_i) at one point.
  double violation(const Vec& x, const Vec& u) const;
};

/// Per-timestep constraint linearization g + C du + D dx <= 0 with the
/// position rows propagated two steps and velocity rows one step so the
/// control appears in C.
struct ConstraintLinearization {
  Vec g;
  Mat C;
  Mat D;
  int n_position{0};
  int n_velocity{0};
  int n_control{0};
  std::vector<int> source_row;

  int rows() const { return static_cast<int>(g.size()); }
};

/// Linearize the step-k constraints about (x_k, u_k).
///
/// Position rows are evaluated at the position image two steps ahead,
/// velocity rows at the state one step ahead, control rows in place.
/// u_next supplies the nominal control at k+1 for the Jacobian chain; it may
/// be null when position rows are dropped. Position rows exist only for
/// k <= N-3 (their two-step image must stay inside the horizon); the
/// terminal state is covered by the forward-pass trust-region check instead.
/// with_D skips the state Jacobian when only C is needed.
ConstraintLinearization linearize_constraints(const ConstraintModel& cmodel,
                                              const DynamicsModel& model,
                                              const Vec& x_k, const Vec& u_k,
                                              const Vec* u_next, int k, int N,
                                              bool with_D = true);

/// Convenience wrapper evaluating at the nominal trajectory point k.
ConstraintLinearization propagate_constraints(const ConstraintModel& cmodel,
                                              const DynamicsModel& model,
                                              const Trajectory& nominal,
                                              int k);

/// Max positive part of all constraint rows over the whole trajectory:
/// state-only rows at every state including the terminal one, control rows
/// at each (x_k, u_k).
double max_violation(const ConstraintModel& cmodel, const Trajectory& traj);

/// State-only (position and velocity) rows evaluated at a bare state.
Vec eval_state_rows(const ConstraintModel& cmodel, const DynamicsModel& model,
                    const Vec& x);

}  // namespace skddp
