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

#include "skddp/types.hpp"

namespace skddp {

/// Running-cost value and derivatives at one (x, u).
struct CostDerivs {
  double l{0.0};
  Vec lx;
  Vec lu;
  Mat lxx;
  Mat lux;
  Mat luu;
};

/// Stage cost interface consumed by the DDP engine. The timestep index lets
/// augmented formulations carry per-step multiplier estimates.
class StageCost {
 public:
  virtual ~StageCost() = default;

  virtual double stage(const Vec& x, const Vec& u, int k) const = 0;
  virtual CostDerivs stage_derivs(const Vec& x, const Vec& u, int k) const = 0;
  virtual double terminal(const Vec& x) const = 0;
  virtual ValueExpansion terminal_expansion(const Vec& x) const = 0;
};

/// Quadratic tracking cost
///   l(x,u)  = 1/2 (x-g)'Q(x-g) + 1/2 (u-ur)'R(u-ur)
///   phi(x)  = 1/2 (x-g)'Qf(x-g)
class CostModel final : public StageCost {
 public:
  CostModel(Mat Q, Mat R, Mat Qf, Vec goal);
  CostModel(Mat Q, Mat R, Mat Qf, Vec goal, Vec u_ref);

  double stage(const Vec& x, const Vec& u, int k) const override;
  CostDerivs stage_derivs(const Vec& x, const Vec& u, int k) const override;
  double terminal(const Vec& x) const override;
  ValueExpansion terminal_expansion(const Vec& x) const override;

  int state_dim() const { return static_cast<int>(Q_.rows()); }
  int control_dim() const { return static_cast<int>(R_.rows()); }
  const Vec& goal() const { return goal_; }

 private:
  Mat Q_, R_, Qf_;
  Vec goal_, u_ref_;
};

/// Sum of stage costs plus terminal cost over the trajectory.
double total_cost(const StageCost& cost, const Trajectory& traj);

}  // namespace skddp
