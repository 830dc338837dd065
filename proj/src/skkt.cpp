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

#include "skddp/skkt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "skddp/qp.hpp"

namespace skddp {

SlackDualState init_slack_dual(const Vec& g, double epsilon) {
  SlackDualState st;
  st.s = (-g.array()).max(epsilon).matrix();
  st.lambda = Vec::Ones(g.size());
  return st;
}

double duality_measure(const SlackDualState& state) {
  const int w = static_cast<int>(state.s.size());
  if (w == 0) {
    throw std::invalid_argument("duality_measure: no constraint rows");
  }
  return state.s.dot(state.lambda) / w;
}

double centering(const SlackDualState& state, double mu) {
  const double xi =
      (state.s.array() * state.lambda.array()).minCoeff() / mu;
  const double base = std::min(0.05 * (1.0 - xi) / xi, 2.0);
  return 0.1 * base * base * base;
}

KktStep solve_kkt_nominal(const QExpansion& q,
                          const ConstraintLinearization& lin,
                          const SlackDualState& state, double mu_sigma) {
  const int w = lin.rows();
  KktStep step;
  Eigen::LLT<Mat> quu(q.quu);
  if (quu.info() != Eigen::Success) {
    throw QuuNotPositiveDefinite(-1);
  }
  if (w == 0) {
    step.du = quu.solve(-q.qu);
    step.ds = step.dlambda = step.dp = step.dq = Vec(0);
    return step;
  }

  const Vec& s = state.s;
  const Vec& lam = state.lambda;
  const Vec a = -q.qu - lin.C.transpose() * lam;
  const Vec b = -(s.array() * lam.array()).matrix() +
                mu_sigma * Vec::Ones(w);
  const Vec d = -(lin.g + s);

  const Mat E = lam.asDiagonal() * lin.C;
  const Vec f_diag = (lam.array() * s.array()).matrix();

  Mat msys = E * quu.solve(E.transpose());
  msys += f_diag.asDiagonal();
  Eigen::LDLT<Mat> mldlt(msys);
  if (mldlt.info() != Eigen::Success) {
    throw QuuNotPositiveDefinite(-1);  // regularization retry signal
  }

  const Vec rhs = E * quu.solve(a) - (lam.array() * d.array()).matrix() + b;
  step.dq = mldlt.solve(rhs);
  step.dp = (b.array() / f_diag.array()).matrix() - step.dq;
  step.du = quu.solve(a - E.transpose() * step.dq);
  step.ds = (s.array() * step.dp.array()).matrix();
  step.dlambda = (lam.array() * step.dq.array()).matrix();
  return step;
}

double fraction_to_boundary(const SlackDualState& state, const Vec& ds,
                            const Vec& dlambda, double zeta) {
  double alpha = 1.0;
  for (int i = 0; i < ds.size(); ++i) {
    if (ds[i] < 0.0) alpha = std::min(alpha, -zeta * state.s[i] / ds[i]);
    if (dlambda[i] < 0.0) {
      alpha = std::min(alpha, -zeta * state.lambda[i] / dlambda[i]);
    }
  }
  return alpha;
}

void update_nominal(ConstraintLinearization& lin, QExpansion& q, double alpha,
                    const Vec& du_prev) {
  lin.g += alpha * (lin.C * du_prev);
  q.qu += alpha * (q.quu * du_prev);
}

InnerLoopResult skkt_inner_loop(QExpansion& q, ConstraintLinearization& lin,
                                const InteriorPointOptions& opts) {
  InnerLoopResult out;
  const int w = lin.rows();
  out.du_accumulated = Vec::Zero(q.quu.rows());
  out.state = init_slack_dual(lin.g, opts.epsilon);
  if (w == 0) return out;

  const double mu0 = duality_measure(out.state);
  double mu = mu0;
  while (mu / mu0 > opts.mu_ratio_tol) {
    if (out.iterations >= opts.max_inner) {
      out.capped = true;
      break;
    }
    const double sigma = centering(out.state, mu);
    const KktStep step = solve_kkt_nominal(q, lin, out.state, mu * sigma);
    const double alpha =
        fraction_to_boundary(out.state, step.ds, step.dlambda, opts.zeta);
    out.state.s += alpha * step.ds;
    out.state.lambda += alpha * step.dlambda;
    update_nominal(lin, q, alpha, step.du);
    out.du_accumulated += alpha * step.du;
    ++out.iterations;
    mu = duality_measure(out.state);
  }
  out.mu_ratio = mu / mu0;
  return out;
}

ConstrainedGains constrained_gains(const QExpansion& q,
                                   const ConstraintLinearization& lin,
                                   const SlackDualState& state) {
  const int m = static_cast<int>(q.quu.rows());
  const int w = lin.rows();
  Eigen::LLT<Mat> quu(q.quu);
  if (quu.info() != Eigen::Success) {
    throw QuuNotPositiveDefinite(-1);
  }

  ConstrainedGains out;
  if (w == 0) {
    out.k = quu.solve(-q.qu);
    out.K = quu.solve(-q.qux);
    out.E = Mat(0, m);
    out.F = Mat(0, 0);
    out.M = Mat(0, 0);
    out.H = Mat::Identity(m, m);
    return out;
  }

  const Vec& s = state.s;
  const Vec& lam = state.lambda;
  out.E = lam.asDiagonal() * lin.C;
  out.F = (lam.array() * s.array()).matrix().asDiagonal();
  Mat msys = out.E * quu.solve(out.E.transpose()) + out.F;
  Eigen::LDLT<Mat> mldlt(msys);
  if (mldlt.info() != Eigen::Success) {
    throw QuuNotPositiveDefinite(-1);
  }
  out.M = mldlt.solve(Mat::Identity(w, w));
  out.H = Mat::Identity(m, m) - out.E.transpose() * out.M * out.E *
                                    quu.solve(Mat::Identity(m, m));

  const Vec g_shift = (lam.array() * (lin.g + s).array()).matrix();
  out.k = quu.solve(-(out.H * q.qu + out.E.transpose() * out.M * g_shift));
  out.K = quu.solve(
      -(out.H * q.qux +
        out.E.transpose() * out.M * (lam.asDiagonal() * lin.D)));
  return out;
}

SkktBackwardResult skkt_backward_pass(const DynamicsModel& model,
                                      const StageCost& cost,
                                      const ConstraintModel* cmodel,
                                      const Trajectory& nominal,
                                      const RegState& reg,
                                      const InteriorPointOptions& ip) {
  const int N = nominal.horizon();
  SkktBackwardResult out;
  out.steps.resize(N);
  out.values.resize(N + 1);
  out.values[N] = cost.terminal_expansion(nominal.states[N]);

  Mat fx, fu;
  try {
    for (int k = N - 1; k >= 0; --k) {
      const Vec& x = nominal.states[k];
      const Vec& u = nominal.controls[k];
      const CostDerivs d = cost.stage_derivs(x, u, k);
      model.jacobians(x, u, fx, fu);
      QExpansion q = regularized_q(d, fx, fu, out.values[k + 1], reg, k);

      ConstraintLinearization lin =
          cmodel != nullptr
              ? propagate_constraints(*cmodel, model, nominal, k)
              : ConstraintLinearization{Vec(0), Mat(0, fu.cols()),
                                        Mat(0, fx.rows()), 0, 0, 0, {}};

      // The forward pass re-solves the constrained subproblem from the
      // accepted nominal, so the stored gradient and the value recursion
      // stay expanded there: the inner-loop shift combines with the
      // residual gain into one total feedforward. The shift itself is a
      // decomposition of the same quadratic and remains internal to the
      // slack/multiplier iteration.
      const Vec qu_nominal = q.qu;
      InnerLoopResult inner = skkt_inner_loop(q, lin, ip);
      const ConstrainedGains gains = constrained_gains(q, lin, inner.state);
      const Vec k_total = inner.du_accumulated + gains.k;

      QExpansion q_at_nominal = q;
      q_at_nominal.qu = qu_nominal;
      out.values[k] = value_recursion(q_at_nominal, k_total, gains.K);

      SkktStepData& sd = out.steps[k];
      sd.quu = q.quu;
      sd.qux = q.qux;
      sd.qu = qu_nominal;
      sd.u_nominal = u;
      sd.k = k_total;
      sd.K = gains.K;

      StepDiag diag;
      diag.timestep = k;
      diag.constraint_rows = lin.rows();
      diag.inner_iterations = inner.iterations;
      diag.mu_ratio = inner.mu_ratio;
      diag.min_slack = lin.rows() > 0 ? inner.state.s.minCoeff() : 0.0;
      diag.min_lambda = lin.rows() > 0 ? inner.state.lambda.minCoeff() : 0.0;
      diag.capped = inner.capped;
      out.step_diags.push_back(diag);
    }
  } catch (const QuuNotPositiveDefinite& e) {
    out.failed_timestep = e.timestep;
    return out;
  }
  out.ok = true;
  return out;
}

namespace {

// Effective per-step bounds on du. With a control box the scaled box toward
// the (clamped) nominal replaces the trust region: the result is always a
// subset of [u_lo, u_hi] - u_nom, so accepted controls respect the limits
// exactly even when the backward shift drifted outside them.
void step_bounds(const Vec& u_nom, double delta, const ControlBox* box,
                 double box_scale, Vec& lo, Vec& hi) {
  const int m = static_cast<int>(u_nom.size());
  if (box == nullptr) {
    lo = Vec::Constant(m, -delta);
    hi = Vec::Constant(m, delta);
    return;
  }
  const Vec u_clamped = u_nom.cwiseMax(box->lo).cwiseMin(box->hi);
  lo = u_clamped + box_scale * (box->lo - u_clamped) - u_nom;
  hi = u_clamped + box_scale * (box->hi - u_clamped) - u_nom;
}

bool terminal_state_feasible(const ConstraintModel* cmodel,
                             const DynamicsModel& model, const Vec& x_terminal,
                             double tol) {
  if (cmodel == nullptr) return true;
  const Vec g = eval_state_rows(*cmodel, model, x_terminal);
  return g.size() == 0 || g.maxCoeff() <= tol;
}

}  // namespace

SkktForwardResult skkt_forward_pass(
    const DynamicsModel& model, const StageCost& cost,
    const ConstraintModel* cmodel, const Trajectory& nominal,
    const SkktBackwardResult& bp, const TrustRegionOptions& tr,
    const ControlBox* box, double accept_cost_below,
    double nominal_violation, double violation_tol) {
  const int N = nominal.horizon();
  const int m = model.control_dim();
  SkktForwardResult out;

  double max_u = 0.0;
  for (const auto& sd : bp.steps) {
    max_u = std::max(max_u, sd.u_nominal.lpNorm<Eigen::Infinity>());
  }
  double delta = std::max(tr.init_floor, tr.init_scale * max_u);
  double box_scale = 1.0;

  const bool nominal_feasible = nominal_violation <= violation_tol;
  constexpr double kTerminalTol = 1e-9;
  constexpr int kMaxAlphaBacktracks = 10;

  Trajectory repair;
  double repair_cost = std::numeric_limits<double>::infinity();
  double repair_delta = 0.0, repair_scale = 1.0, repair_alpha = 0.0;

  for (int restart = 0; restart <= tr.max_restarts; ++restart) {
    out.restarts = restart;
    if (delta < tr.min_delta || box_scale < tr.min_delta) break;

    // Backtracking on the feedforward: alpha scales the stored gradient so
    // the QP minimizer is alpha k + K dx with the feedback left intact; the
    // hard constraint rows are unaffected. An infeasible QP at one alpha
    // just moves on to a smaller step, which keeps the rollout nearer the
    // nominal; the trust region shrinks only when no alpha completes.
    bool completed_any = false;
    for (int bt = 0; bt <= kMaxAlphaBacktracks; ++bt) {
      const double alpha = std::pow(0.5, bt);

      Trajectory traj;
      traj.dt = nominal.dt;
      traj.rollout_consistent = true;
      traj.states.reserve(N + 1);
      traj.controls.reserve(N);
      traj.states.push_back(nominal.states[0]);

      bool failed = false;
      for (int k = 0; k < N - 1 && !failed; ++k) {
        const SkktStepData& sd = bp.steps[k];
        const Vec dx = traj.states.back() - nominal.states[k];

        QpProblem qp;
        qp.H = sd.quu;
        qp.q = alpha * sd.qu + sd.qux * dx;
        step_bounds(sd.u_nominal, delta, box, box_scale, qp.lo, qp.hi);

        if (cmodel != nullptr) {
          const Vec* u_next =
              k + 1 < N ? &bp.steps[k + 1].u_nominal : nullptr;
          const ConstraintLinearization lin =
              linearize_constraints(*cmodel, model, traj.states.back(),
                                    sd.u_nominal, u_next, k, N, false);
          qp.A = lin.C;
          qp.b = -lin.g;
        } else {
          qp.A = Mat(0, m);
          qp.b = Vec(0);
        }

        const QpSolution sol = solve_qp(qp);
        if (sol.status != QpStatus::Optimal) {
          failed = true;
          break;
        }
        Vec u = sd.u_nominal + sol.z;
        Vec next = model.step(traj.states.back(), u);
        if (!is_finite(next)) {
          failed = true;
          break;
        }
        traj.controls.push_back(std::move(u));
        traj.states.push_back(std::move(next));
      }
      if (failed) continue;

      // Terminal step: box only, then shrink until the terminal state
      // passes the nonlinear constraint check.
      const SkktStepData& sd = bp.steps[N - 1];
      const Vec dx = traj.states.back() - nominal.states[N - 1];
      double term_delta = delta;
      double term_scale = box_scale;
      bool term_ok = false;
      Vec u_term, x_term;
      while (term_delta >= tr.min_delta && term_scale >= tr.min_delta) {
        Vec lo, hi;
        step_bounds(sd.u_nominal, term_delta, box, term_scale, lo, hi);
        const BoxQpSolution sol =
            solve_box_qp(sd.quu, alpha * sd.qu + sd.qux * dx, lo, hi);
        if (sol.status != QpStatus::Optimal) break;
        u_term = sd.u_nominal + sol.z;
        x_term = model.step(traj.states.back(), u_term);
        if (is_finite(x_term) &&
            terminal_state_feasible(cmodel, model, x_term, kTerminalTol)) {
          term_ok = true;
          break;
        }
        if (box == nullptr) {
          term_delta *= tr.eta;
        } else {
          term_scale *= tr.eta;
        }
      }
      if (!term_ok) continue;

      traj.controls.push_back(u_term);
      traj.states.push_back(x_term);
      const double candidate_cost = total_cost(cost, traj);
      if (!std::isfinite(candidate_cost)) continue;
      completed_any = true;
      out.best_cost = std::min(out.best_cost, candidate_cost);
      if (candidate_cost < accept_cost_below) {
        out.trajectory = std::move(traj);
        out.cost = candidate_cost;
        out.ok = true;
        out.delta_final = delta;
        out.box_scale_final = box_scale;
        out.alpha_final = alpha;
        return out;
      }
      if (!nominal_feasible && cmodel != nullptr &&
          candidate_cost < repair_cost &&
          max_violation(*cmodel, traj) < nominal_violation) {
        repair_cost = candidate_cost;
        repair = std::move(traj);
        repair_delta = delta;
        repair_scale = box_scale;
        repair_alpha = alpha;
      }
    }

    if (completed_any) {
      // Some alpha produced a complete candidate and none decreased the
      // cost; shrinking the trust region cannot improve that. From an
      // infeasible nominal the cheapest violation-repairing candidate is
      // taken instead.
      if (std::isfinite(repair_cost)) {
        out.trajectory = std::move(repair);
        out.cost = repair_cost;
        out.ok = true;
        out.delta_final = repair_delta;
        out.box_scale_final = repair_scale;
        out.alpha_final = repair_alpha;
      }
      return out;
    }
    if (box == nullptr) {
      delta *= tr.eta;
    } else {
      box_scale *= tr.eta;
    }
  }
  return out;
}

namespace {

std::vector<int> independent_rows(const Mat& c, const std::vector<int>& cand,
                                  int max_rows) {
  if (cand.empty()) return {};
  Mat ct(c.cols(), cand.size());
  for (size_t i = 0; i < cand.size(); ++i) {
    ct.col(i) = c.row(cand[i]).transpose();
  }
  Eigen::ColPivHouseholderQR<Mat> qr(ct);
  const int rank = std::min<int>(static_cast<int>(qr.rank()), max_rows);
  std::vector<int> keep;
  for (int i = 0; i < rank; ++i) {
    keep.push_back(cand[qr.colsPermutation().indices()[i]]);
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

// Top block of [H A'; A 0]^-1 [rtop; rbot], columnwise.
Mat eq_kkt_solve(const Mat& H, const Mat& A, const Mat& rtop,
                 const Mat& rbot) {
  const int m = static_cast<int>(H.rows());
  const int na = static_cast<int>(A.rows());
  Mat kkt = Mat::Zero(m + na, m + na);
  kkt.topLeftCorner(m, m) = H;
  kkt.topRightCorner(m, na) = A.transpose();
  kkt.bottomLeftCorner(na, m) = A;
  Mat rhs(m + na, rtop.cols());
  rhs.topRows(m) = rtop;
  rhs.bottomRows(na) = rbot;
  return kkt.fullPivLu().solve(rhs).topRows(m);
}

}  // namespace

SkktBackwardResult active_set_backward(const DynamicsModel& model,
                                       const StageCost& cost,
                                       const ConstraintModel* cmodel,
                                       const Trajectory& nominal,
                                       const RegState& reg,
                                       double near_active_threshold) {
  const int N = nominal.horizon();
  const int m = model.control_dim();
  SkktBackwardResult out;
  out.steps.resize(N);
  out.values.resize(N + 1);
  out.values[N] = cost.terminal_expansion(nominal.states[N]);

  Mat fx, fu;
  try {
    for (int k = N - 1; k >= 0; --k) {
      const Vec& x = nominal.states[k];
      const Vec& u = nominal.controls[k];
      const CostDerivs d = cost.stage_derivs(x, u, k);
      model.jacobians(x, u, fx, fu);
      const QExpansion q = regularized_q(d, fx, fu, out.values[k + 1], reg, k);

      Gains g;
      if (cmodel != nullptr) {
        const ConstraintLinearization lin =
            propagate_constraints(*cmodel, model, nominal, k);
        std::vector<int> near;
        for (int i = 0; i < lin.rows(); ++i) {
          if (lin.g[i] >= -near_active_threshold) near.push_back(i);
        }
        near = independent_rows(lin.C, near, m);
        if (!near.empty()) {
          Mat ca(near.size(), m), da(near.size(), fx.rows());
          Vec ga(near.size());
          for (size_t i = 0; i < near.size(); ++i) {
            ca.row(i) = lin.C.row(near[i]);
            da.row(i) = lin.D.row(near[i]);
            ga[i] = lin.g[near[i]];
          }
          g.k = eq_kkt_solve(q.quu, ca, -q.qu, -ga);
          g.K = eq_kkt_solve(q.quu, ca, -q.qux, -da);
        } else {
          g = unconstrained_gains(q);
        }
      } else {
        g = unconstrained_gains(q);
      }

      out.values[k] = value_recursion(q, g.k, g.K);
      SkktStepData& sd = out.steps[k];
      sd.quu = q.quu;
      sd.qux = q.qux;
      sd.qu = q.qu;
      sd.u_nominal = u;
      sd.k = g.k;
      sd.K = g.K;
    }
  } catch (const QuuNotPositiveDefinite& e) {
    out.failed_timestep = e.timestep;
    return out;
  }
  out.ok = true;
  return out;
}

namespace {

// Forward pass for the active-set baseline: near-active rows are pinned as
// equalities; the trust region is enforced a posteriori.
SkktForwardResult active_set_forward(const DynamicsModel& model,
                                     const StageCost& cost,
                                     const ConstraintModel* cmodel,
                                     const Trajectory& nominal,
                                     const SkktBackwardResult& bp,
                                     const TrustRegionOptions& tr,
                                     double near_active_threshold,
                                     double accept_cost_below,
                                     double nominal_violation,
                                     double violation_tol) {
  const int N = nominal.horizon();
  const int m = model.control_dim();
  SkktForwardResult out;

  double max_u = 0.0;
  for (const auto& sd : bp.steps) {
    max_u = std::max(max_u, sd.u_nominal.lpNorm<Eigen::Infinity>());
  }
  double delta = std::max(tr.init_floor, tr.init_scale * max_u);
  const bool nominal_feasible = nominal_violation <= violation_tol;
  constexpr double kTerminalTol = 1e-9;
  constexpr int kMaxAlphaBacktracks = 10;

  Trajectory repair;
  double repair_cost = std::numeric_limits<double>::infinity();
  double repair_delta = 0.0, repair_alpha = 0.0;

  for (int restart = 0; restart <= tr.max_restarts; ++restart) {
    out.restarts = restart;
    if (delta < tr.min_delta) break;

    bool completed_any = false;
    for (int bt = 0; bt <= kMaxAlphaBacktracks; ++bt) {
      const double alpha = std::pow(0.5, bt);

      Trajectory traj;
      traj.dt = nominal.dt;
      traj.rollout_consistent = true;
      traj.states.push_back(nominal.states[0]);
      bool failed = false;

      for (int k = 0; k < N - 1 && !failed; ++k) {
        const SkktStepData& sd = bp.steps[k];
        const Vec dx = traj.states.back() - nominal.states[k];
        const Vec qlin = alpha * sd.qu + sd.qux * dx;

        Vec du;
        if (cmodel != nullptr) {
          const Vec* u_next =
              k + 1 < N ? &bp.steps[k + 1].u_nominal : nullptr;
          const ConstraintLinearization lin =
              linearize_constraints(*cmodel, model, traj.states.back(),
                                    sd.u_nominal, u_next, k, N, false);
          std::vector<int> near;
          for (int i = 0; i < lin.rows(); ++i) {
            if (lin.g[i] >= -near_active_threshold) near.push_back(i);
          }
          near = independent_rows(lin.C, near, m);
          if (!near.empty()) {
            Mat ca(near.size(), m);
            Vec ga(near.size());
            for (size_t i = 0; i < near.size(); ++i) {
              ca.row(i) = lin.C.row(near[i]);
              ga[i] = lin.g[near[i]];
            }
            du = eq_kkt_solve(sd.quu, ca, -qlin, -ga);
          } else {
            du = sd.quu.llt().solve(-qlin);
          }
        } else {
          du = sd.quu.llt().solve(-qlin);
        }

        if (!is_finite(du) || du.lpNorm<Eigen::Infinity>() > delta) {
          failed = true;
          break;
        }
        Vec u = sd.u_nominal + du;
        Vec next = model.step(traj.states.back(), u);
        if (!is_finite(next)) {
          failed = true;
          break;
        }
        traj.controls.push_back(std::move(u));
        traj.states.push_back(std::move(next));
      }
      if (failed) continue;

      const SkktStepData& sd = bp.steps[N - 1];
      const Vec dx = traj.states.back() - nominal.states[N - 1];
      double term_delta = delta;
      bool term_ok = false;
      Vec u_term, x_term;
      while (term_delta >= tr.min_delta) {
        const Vec lo = Vec::Constant(m, -term_delta);
        const Vec hi = Vec::Constant(m, term_delta);
        const BoxQpSolution sol =
            solve_box_qp(sd.quu, alpha * sd.qu + sd.qux * dx, lo, hi);
        if (sol.status != QpStatus::Optimal) break;
        u_term = sd.u_nominal + sol.z;
        x_term = model.step(traj.states.back(), u_term);
        if (is_finite(x_term) &&
            terminal_state_feasible(cmodel, model, x_term, kTerminalTol)) {
          term_ok = true;
          break;
        }
        term_delta *= tr.eta;
      }
      if (!term_ok) continue;

      traj.controls.push_back(u_term);
      traj.states.push_back(x_term);
      const double candidate_cost = total_cost(cost, traj);
      if (!std::isfinite(candidate_cost)) continue;
      completed_any = true;
      out.best_cost = std::min(out.best_cost, candidate_cost);
      if (candidate_cost < accept_cost_below) {
        out.trajectory = std::move(traj);
        out.cost = candidate_cost;
        out.ok = true;
        out.delta_final = delta;
        out.alpha_final = alpha;
        return out;
      }
      if (!nominal_feasible && cmodel != nullptr &&
          candidate_cost < repair_cost &&
          max_violation(*cmodel, traj) < nominal_violation) {
        repair_cost = candidate_cost;
        repair = std::move(traj);
        repair_delta = delta;
        repair_alpha = alpha;
      }
    }

    if (completed_any) {
      if (std::isfinite(repair_cost)) {
        out.trajectory = std::move(repair);
        out.cost = repair_cost;
        out.ok = true;
        out.delta_final = repair_delta;
        out.alpha_final = repair_alpha;
      }
      return out;
    }
    delta *= tr.eta;
  }
  return out;
}

enum class ConstrainedVariant { Skkt, ActiveSet };

SolveResult solve_constrained_impl(const Problem& problem,
                                   const SolverOptions& options,
                                   std::optional<Trajectory> initial,
                                   ConstrainedVariant variant,
                                   const ControlBox* box) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
  };

  const DynamicsModel& model = *problem.dynamics;
  const StageCost& cost = *problem.cost;
  const ConstraintModel* cmodel = problem.constraints.get();

  Trajectory traj =
      initial.has_value()
          ? std::move(*initial)
          : rollout(model, problem.x0,
                    std::vector<Vec>(problem.horizon,
                                     Vec::Zero(model.control_dim())));

  SolveResult result;
  Diagnostics& diag = result.report.diagnostics;

  double cost_now = total_cost(cost, traj);
  double viol_now = cmodel != nullptr ? max_violation(*cmodel, traj) : 0.0;
  RegState reg = options.reg.initial();
  ExitStatus status = ExitStatus::MaxIterations;
  bool converged = false;
  long inner_total = 0;
  int outer = 0;

  const char* phase =
      variant == ConstrainedVariant::Skkt ? "skkt" : "active_set";

  while (outer < options.max_outer_iterations) {
    if (elapsed() > options.time_budget_s) {
      status = ExitStatus::TimeBudget;
      break;
    }
    ++outer;

    SkktBackwardResult bp;
    bool backward_failed = false;
    for (;;) {
      bp = variant == ConstrainedVariant::Skkt
               ? skkt_backward_pass(model, cost, cmodel, traj, reg,
                                    options.ip)
               : active_set_backward(model, cost, cmodel, traj, reg);
      if (bp.ok) break;
      if (reg.nu1 >= reg.nu_max && reg.nu2 >= reg.nu_max) {
        backward_failed = true;
        break;
      }
      reg = regularization_schedule(reg, false);
    }
    if (backward_failed) {
      status = ExitStatus::BackwardPassFailure;
      diag.events.push_back("regularization exhausted in backward pass");
      break;
    }
    for (const auto& sdg : bp.step_diags) {
      inner_total += sdg.inner_iterations;
    }

    // Acceptance is plain cost decrease; from an infeasible nominal a
    // feasibility-restoring step may raise the cost, so violation
    // improvement is accepted there too. Both checks run inside the
    // forward pass's shrink loop.
    SkktForwardResult fp =
        variant == ConstrainedVariant::Skkt
            ? skkt_forward_pass(model, cost, cmodel, traj, bp, options.tr,
                                box, cost_now, viol_now,
                                options.violation_tol)
            : active_set_forward(model, cost, cmodel, traj, bp, options.tr,
                                 1e-3, cost_now, viol_now,
                                 options.violation_tol);

    const bool accepted = fp.ok;
    double dj = std::numeric_limits<double>::infinity();
    if (accepted) {
      dj = std::abs(cost_now - fp.cost);
      viol_now = cmodel != nullptr ? max_violation(*cmodel, fp.trajectory)
                                   : 0.0;
      traj = std::move(fp.trajectory);
      cost_now = fp.cost;
      reg = regularization_schedule(reg, true);
    } else {
      if (std::isfinite(fp.best_cost)) dj = std::abs(cost_now - fp.best_cost);
      reg = regularization_schedule(reg, false);
    }

    if (options.record_step_diagnostics) {
      IterationDiag rec;
      rec.iteration = static_cast<int>(diag.iterations.size());
      rec.phase = phase;
      rec.cost = cost_now;
      rec.max_violation = viol_now;
      rec.nu1 = reg.nu1;
      rec.nu2 = reg.nu2;
      rec.accepted = accepted;
      rec.steps = bp.step_diags;
      diag.iterations.push_back(std::move(rec));
    }

    // A rejected pass whose best candidate sits within the cost tolerance
    // of a feasible nominal also counts as converged (nothing left to gain).
    if (dj < options.cost_change_tol && viol_now <= options.violation_tol) {
      status = ExitStatus::Converged;
      converged = true;
      break;
    }
    if (!accepted && reg.nu1 >= reg.nu_max && reg.nu2 >= reg.nu_max) {
      status = ExitStatus::ForwardPassFailure;
      diag.events.push_back("no acceptable forward pass at max regularization");
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

}  // namespace

SolveResult solve_skkt(const Problem& problem, const SolverOptions& options,
                       std::optional<Trajectory> initial) {
  return solve_constrained_impl(problem, options, std::move(initial),
                                ConstrainedVariant::Skkt, nullptr);
}

SolveResult solve_active_set(const Problem& problem,
                             const SolverOptions& options,
                             std::optional<Trajectory> initial) {
  return solve_constrained_impl(problem, options, std::move(initial),
                                ConstrainedVariant::ActiveSet, nullptr);
}

namespace detail {

SolveResult solve_skkt_with_box(const Problem& problem,
                                const SolverOptions& options,
                                std::optional<Trajectory> initial,
                                const ControlBox& box) {
  return solve_constrained_impl(problem, options, std::move(initial),
                                ConstrainedVariant::Skkt, &box);
}

}  // namespace detail

}  // namespace skddp
