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

#include "skddp/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace skddp {

void DynamicsModel::jacobians(const Vec& x, const Vec& u, Mat& fx,
                              Mat& fu) const {
  fd_jacobians(*this, x, u, fx, fu);
}

std::vector<int> DynamicsModel::velocity_indices() const {
  std::vector<int> pos = position_indices();
  std::vector<int> vel;
  for (int i = 0; i < state_dim(); ++i) {
    if (std::find(pos.begin(), pos.end(), i) == pos.end()) vel.push_back(i);
  }
  return vel;
}

Vec DynamicsModel::position_step(const Vec& x) const {
  const Vec next = step(x, Vec::Zero(control_dim()));
  const std::vector<int> pos = position_indices();
  Vec xp(pos.size());
  for (size_t i = 0; i < pos.size(); ++i) xp[i] = next[pos[i]];
  return xp;
}

Mat DynamicsModel::position_jacobian(const Vec& x, const Vec& u) const {
  Mat fx, fu;
  jacobians(x, u, fx, fu);
  const std::vector<int> pos = position_indices();
  Mat jac(pos.size(), state_dim());
  for (size_t i = 0; i < pos.size(); ++i) jac.row(i) = fx.row(pos[i]);
  return jac;
}

void fd_jacobians(const DynamicsModel& model, const Vec& x, const Vec& u,
                  Mat& fx, Mat& fu) {
  const int n = model.state_dim();
  const int m = model.control_dim();
  fx.resize(n, n);
  fu.resize(n, m);
  for (int j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    fx.col(j) = (model.step(xp, u) - model.step(xm, u)) / (2.0 * h);
  }
  for (int j = 0; j < m; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(u[j]));
    Vec up = u, um = u;
    up[j] += h;
    um[j] -= h;
    fu.col(j) = (model.step(x, up) - model.step(x, um)) / (2.0 * h);
  }
}

Trajectory rollout(const DynamicsModel& model, const Vec& x0,
                   const std::vector<Vec>& controls) {
  if (!is_finite(x0)) throw RolloutDivergence(0, "rollout: non-finite x0");
  Trajectory traj;
  traj.dt = model.dt();
  traj.rollout_consistent = true;
  traj.states.reserve(controls.size() + 1);
  traj.controls = controls;
  traj.states.push_back(x0);
  for (size_t k = 0; k < controls.size(); ++k) {
    if (!is_finite(controls[k])) {
      throw RolloutDivergence(static_cast<int>(k),
                              "rollout: non-finite control at step " +
                                  std::to_string(k));
    }
    Vec next = model.step(traj.states.back(), controls[k]);
    if (!is_finite(next)) {
      throw RolloutDivergence(static_cast<int>(k),
                              "rollout: diverged at step " +
                                  std::to_string(k));
    }
    traj.states.push_back(std::move(next));
  }
  return traj;
}

double dynamics_defect(const DynamicsModel& model, const Trajectory& traj) {
  double defect = 0.0;
  for (int k = 0; k < traj.horizon(); ++k) {
    const Vec pred = model.step(traj.states[k], traj.controls[k]);
    defect = std::max(defect,
                      (traj.states[k + 1] - pred).lpNorm<Eigen::Infinity>());
  }
  return defect;
}

}  // namespace skddp
