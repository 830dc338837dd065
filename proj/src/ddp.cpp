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

#include "skddp/ddp.hpp"

#include <chrono>
#include <cmath>

#include "skddp/qp.hpp"

namespace skddp {

std::string to_string(ExitStatus s) {
  switch (s) {
    case ExitStatus::Converged: return "converged";
    case ExitStatus::MaxIterations: return "max_iterations";
    case ExitStatus::TimeBudget: return "time_budget";
    case ExitStatus::BackwardPassFailure: return "backward_pass_failure";
    case ExitStatus::ForwardPassFailure: return "forward_pass_failure";
    case ExitStatus::Diverged: return "diverged";
  }
  return "unknown";
}

QExpansion q_expansion(const CostDerivs& d, const Mat& fx, const Mat& fu,
                       const ValueExpansion& next) {
  QExpansion q;
  q.qx = d.lx + fx.transpose() * next.vx;
  q.qu = d.lu + fu.transpose() * next.vx;
  q.qxx = d.lxx + fx.transpose() * next.vxx * fx;
  q.qux = d.lux + fu.transpose() * next.vxx * fx;
  q.quu = d.luu + fu.transpose() * next.vxx * fu;
  return q;
}

QExpansion regularized_q(const CostDerivs& d, const Mat& fx, const Mat& fu,
                         const ValueExpansion& next, const RegState& reg,
                         int timestep) {
  const int n = static_cast<int>(fx.rows());
  const int m = static_cast<int>(fu.cols());
  const Mat vxx_reg = next.vxx + reg.nu1 * Mat::Identity(n, n);
  QExpansion q;
  q.qx = d.lx + fx.transpose() * next.vx;
  q.qu = d.lu + fu.transpose() * next.vx;
  q.qxx = d.lxx + fx.transpose() * vxx_reg * fx;
  q.qux = d.lux + fu.transpose() * vxx_reg * fx;
  q.quu = d.luu + fu.transpose() * vxx_reg * fu +
          reg.nu2 * Mat::Identity(m, m);
  Eigen::LLT<Mat> llt(q.quu);
  if (llt.info() != Eigen::Success) {
    throw QuuNotPositiveDefinite(timestep);
  }
  return q;
}

Gains unconstrained_gains(const QExpansion& q) {
  Eigen::LLT<Mat> llt(q.quu);
  if (llt.info() != Eigen::Success) {
    throw QuuNotPositiveDefinite(-1);
  }
  Gains g;
  g.k = llt.solve(-q.qu);
  g.K = llt.solve(-q.qux);
  return g;
}

ValueExpansion value_recursion(const QExpansion& q, const Vec& k,
                               const Mat& K) {
  ValueExpansion v;
  v.vx = q.qx + K.transpose() * q.quu * k + K.transpose() * q.qu +
         q.qux.transpose() * k;
  Mat vxx = q.qxx + K.transpose() * q.quu * K + K.transpose() * q.qux +
            q.qux.transpose() * K;
  v.vxx = 0.5 * (vxx + vxx.transpose());
  return v;
}

RegState regularization_schedule(RegState reg, bool accepted) {
  if (accepted) {
    reg.nu1 = std::max(reg.nu_min, reg.nu1 * reg.scale_down);
    reg.nu2 = std::max(reg.nu_min, reg.nu2 * reg.scale_down);
  } else {
    reg.nu1 = std::min(reg.nu_max, reg.nu1 * reg.scale_up);
    reg.nu2 = std::min(reg.nu_max, reg.nu2 * reg.scale_up);
  }
  return reg;
}

BackwardPassResult ddp_backward_pass(const DynamicsModel& model,
                                     const StageCost& cost,
                                     const Trajectory& nominal,
                                     const RegState& reg,
                                     const ControlBox* box) {
  const int N = nominal.horizon();
  BackwardPassResult out;
  out.gains.resize(N);

  ValueExpansion value = cost.terminal_expansion(nominal.states[N]);
  Mat fx, fu;
  try {
    for (int k = N - 1; k >= 0; --k) {
      const Vec& x = nominal.states[k];
      const Vec& u = nominal.controls[k];
      const CostDerivs d = cost.stage_derivs(x, u, k);
      model.jacobians(x, u, fx, fu);
      const QExpansion q = regularized_q(d, fx, fu, value, reg, k);

      Gains g;
      if (box != nullptr) {
        // Feedforward from the box QP; feedback rows of active limits are
        // zeroed and the free block uses the free-subspace solve.
        const BoxQpSolution bqp =
            solve_box_qp(q.quu, q.qu, box->lo - u, box->hi - u);
        if (bqp.status != QpStatus::Optimal) {
          out.failed_timestep = k;
          return out;
        }
        g.k = bqp.z;
        g.K = Mat::Zero(fu.cols(), fx.rows());
        std::vector<int> free;
        std::vector<bool> clamped(fu.cols(), false);
        for (int j : bqp.lower_active) clamped[j] = true;
        for (int j : bqp.upper_active) clamped[j] = true;
        for (int j = 0; j < fu.cols(); ++j) {
          if (!clamped[j]) free.push_back(j);
        }
        if (!free.empty()) {
          Mat hff(free.size(), free.size());
          Mat quxf(free.size(), fx.rows());
          for (size_t a = 0; a < free.size(); ++a) {
            quxf.row(a) = q.qux.row(free[a]);
            for (size_t b = 0; b < free.size(); ++b) {
              hff(a, b) = q.quu(free[a], free[b]);
            }
          }
          const Mat kf = hff.llt().solve(-quxf);
          for (size_t a = 0; a < free.size(); ++a) {
            g.K.row(free[a]) = kf.row(a);
          }
        }
      } else {
        g = unconstrained_gains(q);
      }

      out.dv1 += g.k.dot(q.qu);
      out.dv2 += 0.5 * g.k.dot(q.quu * g.k);
      value = value_recursion(q, g.k, g.K);
      out.gains[k] = std::move(g);
    }
  } catch (const QuuNotPositiveDefinite& e) {
    out.failed_timestep = e.timestep;
    return out;
  }
  out.ok = true;
  return out;
}

ForwardPassResult ddp_forward_pass(const DynamicsModel& model,
                                   const StageCost& cost,
                                   const Trajectory& nominal,
                                   const GainSchedule& gains, double alpha,
                                   const ControlBox* box) {
  const int N = nominal.horizon();
  ForwardPassResult out;
  Trajectory traj;
  traj.dt = nominal.dt;
  traj.rollout_consistent = true;
  traj.states.reserve(N + 1);
  traj.controls.reserve(N);
  traj.states.push_back(nominal.states[0]);
  try {
    for (int k = 0; k < N; ++k) {
      const Vec dx = traj.states.back() - nominal.states[k];
      Vec u = nominal.controls[k] + alpha * gains[k].k + gains[k].K * dx;
      if (box != nullptr) {
        u = u.cwiseMax(box->lo).cwiseMin(box->hi);
      }
      Vec next = model.step(traj.states.back(), u);
      if (!is_finite(next) || !is_finite(u)) {
        throw RolloutDivergence(k, "forward pass diverged");
      }
      traj.controls.push_back(std::move(u));
      traj.states.push_back(std::move(next));
    }
  } catch (const RolloutDivergence&) {
    return out;
  }
  out.cost = total_cost(cost, traj);
  if (!std::isfinite(out.cost)) return out;
  out.trajectory = std::move(traj);
  out.ok = true;
  return out;
}

DdpLoopResult run_ddp_loop(const DynamicsModel& model, const StageCost& cost,
                           Trajectory initial, RegState& reg,
                           int max_iterations, double cost_change_tol,
                           int max_backtracks, const ControlBox* box,
                           Diagnostics* diag, const char* phase,
                           const std::chrono::steady_clock::time_point*
                               deadline) {
  DdpLoopResult out;
  out.trajectory = std::move(initial);
  out.cost = total_cost(cost, out.trajectory);

  for (int iter = 0; iter < max_iterations; ++iter) {
    if (deadline != nullptr &&
        std::chrono::steady_clock::now() > *deadline) {
      out.status = ExitStatus::TimeBudget;
      return out;
    }
    out.iterations = iter + 1;

    BackwardPassResult bp;
    for (;;) {
      bp = ddp_backward_pass(model, cost, out.trajectory, reg, box);
      if (bp.ok) break;
      if (reg.nu1 >= reg.nu_max && reg.nu2 >= reg.nu_max) {
        out.status = ExitStatus::BackwardPassFailure;
        return out;
      }
      reg = regularization_schedule(reg, false);
    }

    bool accepted = false;
    double best_cost = out.cost;
    ForwardPassResult best;
    for (int i = 0; i <= max_backtracks; ++i) {
      const double alpha = std::pow(0.5, i);
      ForwardPassResult fp =
          ddp_forward_pass(model, cost, out.trajectory, bp.gains, alpha, box);
      if (fp.ok && fp.cost < best_cost) {
        best = std::move(fp);
        best_cost = best.cost;
        accepted = true;
        break;  // simple decrease: first improving alpha wins
      }
    }

    const double dj = out.cost - best_cost;
    if (accepted) {
      out.trajectory = std::move(best.trajectory);
      out.cost = best_cost;
      reg = regularization_schedule(reg, true);
    } else {
      reg = regularization_schedule(reg, false);
    }
    if (diag != nullptr) {
      IterationDiag rec;
      rec.iteration = static_cast<int>(diag->iterations.size());
      rec.phase = phase;
      rec.cost = out.cost;
      rec.nu1 = reg.nu1;
      rec.nu2 = reg.nu2;
      rec.accepted = accepted;
      diag->iterations.push_back(std::move(rec));
    }

    if (dj < cost_change_tol) {
      // Covers both a small accepted improvement and an already-optimal
      // nominal where no alpha strictly decreases the cost.
      out.status = ExitStatus::Converged;
      out.converged = true;
      return out;
    }
    if (!accepted && reg.nu1 >= reg.nu_max && reg.nu2 >= reg.nu_max) {
      out.status = ExitStatus::ForwardPassFailure;
      return out;
    }
  }
  out.status = ExitStatus::MaxIterations;
  return out;
}

SolveResult solve_unconstrained(const Problem& problem,
                                const SolverOptions& options,
                                std::optional<Trajectory> initial) {
  const auto t0 = std::chrono::steady_clock::now();
  Trajectory traj =
      initial.has_value()
          ? std::move(*initial)
          : rollout(*problem.dynamics, problem.x0,
                    std::vector<Vec>(problem.horizon,
                                     Vec::Zero(problem.dynamics->control_dim())));

  RegState reg = options.reg.initial();
  SolveResult result;
  const bool budgeted = std::isfinite(options.time_budget_s);
  const auto deadline =
      t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
               std::chrono::duration<double>(options.time_budget_s));
  DdpLoopResult loop = run_ddp_loop(
      *problem.dynamics, *problem.cost, std::move(traj), reg,
      options.max_outer_iterations, options.cost_change_tol,
      options.max_backtracks, nullptr, &result.report.diagnostics, "ddp",
      budgeted ? &deadline : nullptr);

  result.trajectory = std::move(loop.trajectory);
  result.report.final_cost = loop.cost;
  result.report.outer_iterations = loop.iterations;
  result.report.status = loop.status;
  result.report.converged = loop.converged;
  result.report.max_violation = 0.0;
  result.report.dynamics_defect =
      dynamics_defect(*problem.dynamics, result.trajectory);
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

}  // namespace skddp
