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

#include "skddp/cost.hpp"

namespace skddp {

CostModel::CostModel(Mat Q, Mat R, Mat Qf, Vec goal)
    : CostModel(std::move(Q), std::move(R), std::move(Qf), std::move(goal),
                Vec()) {}

CostModel::CostModel(Mat Q, Mat R, Mat Qf, Vec goal, Vec u_ref)
    : Q_(std::move(Q)),
      R_(std::move(R)),
      Qf_(std::move(Qf)),
      goal_(std::move(goal)),
      u_ref_(std::move(u_ref)) {
  if (Q_.rows() != Q_.cols() || R_.rows() != R_.cols() ||
      Qf_.rows() != Qf_.cols() || Q_.rows() != goal_.size() ||
      Qf_.rows() != goal_.size()) {
    throw DimensionError("CostModel: inconsistent weight dimensions");
  }
  if (u_ref_.size() == 0) u_ref_ = Vec::Zero(R_.rows());
  if (u_ref_.size() != R_.rows()) {
    throw DimensionError("CostModel: control reference dimension mismatch");
  }
}

double CostModel::stage(const Vec& x, const Vec& u, int) const {
  const Vec dx = x - goal_;
  const Vec du = u - u_ref_;
  return 0.5 * dx.dot(Q_ * dx) + 0.5 * du.dot(R_ * du);
}

CostDerivs CostModel::stage_derivs(const Vec& x, const Vec& u, int) const {
  const Vec dx = x - goal_;
  const Vec du = u - u_ref_;
  CostDerivs d;
  d.l = 0.5 * dx.dot(Q_ * dx) + 0.5 * du.dot(R_ * du);
  d.lx = Q_ * dx;
  d.lu = R_ * du;
  d.lxx = Q_;
  d.luu = R_;
  d.lux = Mat::Zero(R_.rows(), Q_.rows());
  return d;
}

double CostModel::terminal(const Vec& x) const {
  const Vec dx = x - goal_;
  return 0.5 * dx.dot(Qf_ * dx);
}

ValueExpansion CostModel::terminal_expansion(const Vec& x) const {
  const Vec dx = x - goal_;
  ValueExpansion v;
  v.v = 0.5 * dx.dot(Qf_ * dx);
  v.vx = Qf_ * dx;
  v.vxx = Qf_;
  return v;
}

double total_cost(const StageCost& cost, const Trajectory& traj) {
  if (traj.states.size() != traj.controls.size() + 1) {
    throw DimensionError("total_cost: states/controls length mismatch");
  }
  double j = 0.0;
  for (int k = 0; k < traj.horizon(); ++k) {
    j += cost.stage(traj.states[k], traj.controls[k], k);
  }
  return j + cost.terminal(traj.states.back());
}

}  // namespace skddp
