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

#include "skddp/constraints.hpp"

#include <algorithm>

namespace skddp {

Mat ConstraintModel::row_hessian_xx(int, const Vec& x, const Vec&) const {
  return Mat::Zero(x.size(), x.size());
}

int ConstraintModel::count_of(ConstraintKind k) const {
  int c = 0;
  for (int i = 0; i < count(); ++i) {
    if (kind(i) == k) ++c;
  }
  return c;
}

std::vector<int> ConstraintModel::rows_of(ConstraintKind k) const {
  std::vector<int> rows;
  for (int i = 0; i < count(); ++i) {
    if (kind(i) == k) rows.push_back(i);
  }
  return rows;
}

double ConstraintModel::violation(const Vec& x, const Vec& u) const {
  const Vec g = eval(x, u);
  double v = 0.0;
  for (int i = 0; i < g.size(); ++i) v = std::max(v, g[i]);
  return v;
}

namespace {

// Select rows of a matrix / vector by index list.
Mat take_rows(const Mat& m, const std::vector<int>& rows) {
  Mat out(rows.size(), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(i) = m.row(rows[i]);
  return out;
}

Vec take_rows(const Vec& v, const std::vector<int>& rows) {
  Vec out(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
  return out;
}

}  // namespace

ConstraintLinearization linearize_constraints(const ConstraintModel& cmodel,
                                              const DynamicsModel& model,
                                              const Vec& x_k, const Vec& u_k,
                                              const Vec* u_next, int k, int N,
                                              bool with_D) {
  const int n = model.state_dim();
  const int m = model.control_dim();
  const Vec zero_u = Vec::Zero(m);

  const std::vector<int> p_rows = cmodel.rows_of(ConstraintKind::Position);
  const std::vector<int> v_rows = cmodel.rows_of(ConstraintKind::Velocity);
  const std::vector<int> c_rows = cmodel.rows_of(ConstraintKind::Control);

  const bool include_position = !p_rows.empty() && k <= N - 3;

  ConstraintLinearization lin;
  lin.n_position = include_position ? static_cast<int>(p_rows.size()) : 0;
  lin.n_velocity = static_cast<int>(v_rows.size());
  lin.n_control = static_cast<int>(c_rows.size());
  const int w = lin.n_position + lin.n_velocity + lin.n_control;
  lin.g.resize(w);
  lin.C.resize(w, m);
  lin.D = with_D ? Mat(w, n) : Mat(0, n);

  if (w == 0) {
    lin.C.resize(0, m);
    lin.D.resize(0, n);
    return lin;
  }

  Mat fx_k, fu_k;
  model.jacobians(x_k, u_k, fx_k, fu_k);

  int row = 0;
  if (include_position) {
    // g^p sits at the position image two steps ahead; chain through
    // f^p_{x,k+1} f_{u,k} so the control enters C.
    const Vec x1 = model.step(x_k, u_k);
    const Vec un = u_next != nullptr ? *u_next : zero_u;
    const Vec x2 = model.step(x1, un);

    Mat gx2, gu2;
    cmodel.jacobians(x2, zero_u, gx2, gu2);
    const Mat gp_x2 = take_rows(gx2, p_rows);

    // Position rows of fx at (x1, .) are control-independent; the nominal
    // next control only fixes the evaluation point.
    const Mat fp_x1 = model.position_jacobian(x1, un);
    const std::vector<int> p_idx = model.position_indices();
    Mat gp_xp(p_rows.size(), p_idx.size());
    for (size_t i = 0; i < p_rows.size(); ++i) {
      for (size_t j = 0; j < p_idx.size(); ++j) {
        gp_xp(i, j) = gp_x2(i, p_idx[j]);
      }
    }
    const Mat chain = gp_xp * fp_x1;  // w_p x n

    const Vec g2 = take_rows(cmodel.eval(x2, zero_u), p_rows);
    lin.g.segment(0, p_rows.size()) = g2;
    lin.C.middleRows(row, p_rows.size()) = chain * fu_k;
    if (with_D) lin.D.middleRows(row, p_rows.size()) = chain * fx_k;
    for (int r : p_rows) lin.source_row.push_back(r);
    row += static_cast<int>(p_rows.size());
  }

  if (!v_rows.empty()) {
    const Vec x1 = model.step(x_k, u_k);
    Mat gx1, gu1;
    cmodel.jacobians(x1, zero_u, gx1, gu1);
    const Mat gv_x1 = take_rows(gx1, v_rows);
    lin.g.segment(row, v_rows.size()) =
        take_rows(cmodel.eval(x1, zero_u), v_rows);
    lin.C.middleRows(row, v_rows.size()) = gv_x1 * fu_k;
    if (with_D) lin.D.middleRows(row, v_rows.size()) = gv_x1 * fx_k;
    for (int r : v_rows) lin.source_row.push_back(r);
    row += static_cast<int>(v_rows.size());
  }

  if (!c_rows.empty()) {
    Mat gx, gu;
    cmodel.jacobians(x_k, u_k, gx, gu);
    lin.g.segment(row, c_rows.size()) =
        take_rows(cmodel.eval(x_k, u_k), c_rows);
    lin.C.middleRows(row, c_rows.size()) = take_rows(gu, c_rows);
    if (with_D) lin.D.middleRows(row, c_rows.size()) = take_rows(gx, c_rows);
    for (int r : c_rows) lin.source_row.push_back(r);
  }

  return lin;
}

ConstraintLinearization propagate_constraints(const ConstraintModel& cmodel,
                                              const DynamicsModel& model,
                                              const Trajectory& nominal,
                                              int k) {
  const int N = nominal.horizon();
  const Vec* u_next = k + 1 < N ? &nominal.controls[k + 1] : nullptr;
  return linearize_constraints(cmodel, model, nominal.states[k],
                               nominal.controls[k], u_next, k, N, true);
}

double max_violation(const ConstraintModel& cmodel, const Trajectory& traj) {
  if (cmodel.count() == 0) return 0.0;
  const int m = traj.controls.empty() ? 0
                                      : static_cast<int>(
                                            traj.controls.front().size());
  const Vec zero_u = Vec::Zero(m);
  const std::vector<int> c_rows = cmodel.rows_of(ConstraintKind::Control);

  double v = 0.0;
  for (size_t k = 0; k < traj.states.size(); ++k) {
    const Vec g = cmodel.eval(traj.states[k],
                              k < traj.controls.size() ? traj.controls[k]
                                                       : zero_u);
    for (int i = 0; i < g.size(); ++i) {
      const bool control_row = cmodel.kind(i) == ConstraintKind::Control;
      if (control_row && k >= traj.controls.size()) continue;
      v = std::max(v, g[i]);
    }
  }
  return v;
}

Vec eval_state_rows(const ConstraintModel& cmodel, const DynamicsModel& model,
                    const Vec& x) {
  const Vec g = cmodel.eval(x, Vec::Zero(model.control_dim()));
  std::vector<int> rows;
  for (int i = 0; i < cmodel.count(); ++i) {
    if (cmodel.kind(i) != ConstraintKind::Control) rows.push_back(i);
  }
  Vec out(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) out[i] = g[rows[i]];
  return out;
}

}  // namespace skddp
