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

#include "skddp/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace skddp {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kInfeasTol = 1e-10;
constexpr double kMultTol = 1e-9;
constexpr double kStepTol = 1e-11;

struct StackedRows {
  Mat A;  // all rows: general, lower bounds, upper bounds
  Vec b;
};

StackedRows stack_rows(const QpProblem& p) {
  const int m = static_cast<int>(p.H.rows());
  const int pg = static_cast<int>(p.A.rows());
  const bool has_box = p.lo.size() > 0;
  const int total = pg + (has_box ? 2 * m : 0);
  StackedRows s;
  s.A.resize(total, m);
  s.b.resize(total);
  if (pg > 0) {
    s.A.topRows(pg) = p.A;
    s.b.head(pg) = p.b;
  }
  if (has_box) {
    s.A.middleRows(pg, m) = -Mat::Identity(m, m);
    s.b.segment(pg, m) = -p.lo;
    s.A.middleRows(pg + m, m) = Mat::Identity(m, m);
    s.b.segment(pg + m, m) = p.hi;
  }
  return s;
}

double max_violation_at(const StackedRows& s, const Vec& z) {
  if (s.A.rows() == 0) return 0.0;
  return std::max(0.0, (s.A * z - s.b).maxCoeff());
}

// Minimize 1/2 sum_i max(a_i'z - b_i, 0)^2 by damped Newton steps on the
// piecewise-quadratic objective. Lands on a feasible point when one exists.
Vec phase1(const StackedRows& s, Vec z) {
  const int m = static_cast<int>(s.A.cols());
  auto value = [&](const Vec& zz) {
    double v = 0.0;
    const Vec r = s.A * zz - s.b;
    for (int i = 0; i < r.size(); ++i) {
      if (r[i] > 0) v += 0.5 * r[i] * r[i];
    }
    return v;
  };
  for (int it = 0; it < 100; ++it) {
    const Vec r = s.A * z - s.b;
    Vec grad = Vec::Zero(m);
    Mat hess = 1e-12 * Mat::Identity(m, m);
    bool any = false;
    for (int i = 0; i < r.size(); ++i) {
      if (r[i] > 0) {
        any = true;
        grad += s.A.row(i).transpose() * r[i];
        hess += s.A.row(i).transpose() * s.A.row(i);
      }
    }
    if (!any) return z;
    Vec step = hess.ldlt().solve(-grad);
    const double v0 = value(z);
    double t = 1.0;
    int bt = 0;
    while (bt++ < 40 && value(z + t * step) > v0 + 1e-4 * t * grad.dot(step)) {
      t *= 0.5;
    }
    z += t * step;
    if (grad.lpNorm<Eigen::Infinity>() < 1e-14) break;
  }
  return z;
}

// Equality-constrained step: minimize the QP restricted to rows W holding
// with equality. Returns the step p from z and the multipliers of W.
bool eqp_step(const Mat& H, const Vec& q, const StackedRows& s,
              const std::vector<int>& W, const Vec& z, Vec& p_step,
              Vec& lambda) {
  const int m = static_cast<int>(H.rows());
  const int nw = static_cast<int>(W.size());
  Mat kkt(m + nw, m + nw);
  kkt.setZero();
  kkt.topLeftCorner(m, m) = H;
  for (int i = 0; i < nw; ++i) {
    kkt.block(m + i, 0, 1, m) = s.A.row(W[i]);
    kkt.block(0, m + i, m, 1) = s.A.row(W[i]).transpose();
  }
  Vec rhs(m + nw);
  rhs.head(m) = -(H * z + q);
  for (int i = 0; i < nw; ++i) rhs[m + i] = s.b[W[i]] - s.A.row(W[i]).dot(z);
  Eigen::FullPivLU<Mat> lu(kkt);
  if (!lu.isInvertible()) return false;
  const Vec sol = lu.solve(rhs);
  p_step = sol.head(m);
  lambda = sol.tail(nw);
  return true;
}

bool rows_independent(const StackedRows& s, const std::vector<int>& W) {
  if (W.empty()) return true;
  Mat aw(W.size(), s.A.cols());
  for (size_t i = 0; i < W.size(); ++i) aw.row(i) = s.A.row(W[i]);
  Eigen::ColPivHouseholderQR<Mat> qr(aw.transpose());
  return qr.rank() == static_cast<Eigen::Index>(W.size());
}

}  // namespace

QpSolution solve_qp(const QpProblem& p) {
  const int m = static_cast<int>(p.H.rows());
  if (p.H.rows() != p.H.cols() || p.q.size() != m) {
    throw DimensionError("solve_qp: H/q dimension mismatch");
  }
  Eigen::LLT<Mat> hllt(p.H);
  if (hllt.info() != Eigen::Success) {
    throw std::invalid_argument("solve_qp: H is not positive definite");
  }
  if (p.lo.size() > 0 && ((p.hi - p.lo).array() < 0).any()) {
    throw std::invalid_argument("solve_qp: empty box");
  }

  const StackedRows s = stack_rows(p);
  const int total = static_cast<int>(s.A.rows());

  QpSolution sol;
  sol.z = hllt.solve(-p.q);
  if (max_violation_at(s, sol.z) <= kFeasTol) {
    sol.status = QpStatus::Optimal;
    return sol;
  }

  Vec z = phase1(s, sol.z);
  const double infeas = max_violation_at(s, z);
  if (infeas > kInfeasTol) {
    sol.z = z;
    sol.status = QpStatus::Infeasible;
    sol.max_violation = infeas;
    return sol;
  }

  // Working set: rows active at the start point, pruned to independence.
  std::vector<int> W;
  {
    const Vec r = s.A * z - s.b;
    for (int i = 0; i < total; ++i) {
      if (std::abs(r[i]) <= kFeasTol) {
        W.push_back(i);
        if (!rows_independent(s, W) ||
            static_cast<int>(W.size()) > m) {
          W.pop_back();
        }
      }
    }
  }

  const int cap = 100 * (m + std::max(total, 1));
  Vec p_step, lambda;
  for (int it = 0; it < cap; ++it) {
    sol.iterations = it + 1;
    if (!eqp_step(p.H, p.q, s, W, z, p_step, lambda)) {
      // Degenerate working set; drop its last row and retry.
      if (W.empty()) break;
      W.pop_back();
      continue;
    }
    if (p_step.lpNorm<Eigen::Infinity>() <= kStepTol) {
      int worst = -1;
      double worst_lambda = -kMultTol;
      for (size_t i = 0; i < W.size(); ++i) {
        if (lambda[i] < worst_lambda) {
          worst_lambda = lambda[i];
          worst = static_cast<int>(i);
        }
      }
      if (worst < 0) {
        sol.z = z;
        sol.active = W;
        std::sort(sol.active.begin(), sol.active.end());
        sol.status = QpStatus::Optimal;
        return sol;
      }
      W.erase(W.begin() + worst);
      continue;
    }

    double alpha = 1.0;
    int blocker = -1;
    for (int i = 0; i < total; ++i) {
      if (std::find(W.begin(), W.end(), i) != W.end()) continue;
      const double ap = s.A.row(i).dot(p_step);
      if (ap > 1e-12) {
        const double ai = (s.b[i] - s.A.row(i).dot(z)) / ap;
        if (ai < alpha) {
          alpha = std::max(ai, 0.0);
          blocker = i;
        }
      }
    }
    z += alpha * p_step;
    if (blocker >= 0) {
      W.push_back(blocker);
      if (!rows_independent(s, W) || static_cast<int>(W.size()) > m) {
        W.pop_back();
      }
    }
  }

  sol.z = z;
  sol.status = QpStatus::MaxIter;
  return sol;
}

BoxQpSolution solve_box_qp(const Mat& H, const Vec& q, const Vec& lo,
                           const Vec& hi) {
  const int m = static_cast<int>(H.rows());
  if (q.size() != m || lo.size() != m || hi.size() != m) {
    throw DimensionError("solve_box_qp: dimension mismatch");
  }
  if (((hi - lo).array() < 0).any()) {
    throw std::invalid_argument("solve_box_qp: empty box (lo > hi)");
  }

  enum Bound { Free = 0, Lower, Upper };
  std::vector<Bound> state(m, Free);
  Vec z(m);
  for (int j = 0; j < m; ++j) {
    z[j] = std::min(std::max(0.0, lo[j]), hi[j]);
    if (z[j] <= lo[j]) state[j] = Lower;
    if (z[j] >= hi[j]) state[j] = Upper;
    if (lo[j] == hi[j]) state[j] = Lower;
  }

  BoxQpSolution sol;
  const int cap = 100 * 3 * std::max(m, 1);
  for (int it = 0; it < cap; ++it) {
    sol.iterations = it + 1;
    std::vector<int> free;
    for (int j = 0; j < m; ++j) {
      if (state[j] == Free) free.push_back(j);
    }

    Vec p_step = Vec::Zero(m);
    if (!free.empty()) {
      Mat hff(free.size(), free.size());
      Vec rhs(free.size());
      const Vec g = H * z + q;
      for (size_t a = 0; a < free.size(); ++a) {
        rhs[a] = -g[free[a]];
        for (size_t bcol = 0; bcol < free.size(); ++bcol) {
          hff(a, bcol) = H(free[a], free[bcol]);
        }
      }
      const Vec pf = hff.llt().solve(rhs);
      for (size_t a = 0; a < free.size(); ++a) p_step[free[a]] = pf[a];
    }

    if (p_step.lpNorm<Eigen::Infinity>() <= kStepTol) {
      const Vec g = H * z + q;
      int release = -1;
      double worst = -kMultTol;
      for (int j = 0; j < m; ++j) {
        if (state[j] == Lower && lo[j] < hi[j] && g[j] < worst) {
          worst = g[j];
          release = j;
        }
        if (state[j] == Upper && -g[j] < worst) {
          worst = -g[j];
          release = j;
        }
      }
      if (release < 0) {
        sol.z = z;
        for (int j = 0; j < m; ++j) {
          if (state[j] == Lower) sol.lower_active.push_back(j);
          if (state[j] == Upper) sol.upper_active.push_back(j);
        }
        sol.status = QpStatus::Optimal;
        return sol;
      }
      state[release] = Free;
      continue;
    }

    double alpha = 1.0;
    int blocker = -1;
    Bound side = Free;
    for (int j : free) {
      if (p_step[j] > 0 && z[j] + p_step[j] > hi[j]) {
        const double aj = (hi[j] - z[j]) / p_step[j];
        if (aj < alpha) {
          alpha = std::max(aj, 0.0);
          blocker = j;
          side = Upper;
        }
      } else if (p_step[j] < 0 && z[j] + p_step[j] < lo[j]) {
        const double aj = (lo[j] - z[j]) / p_step[j];
        if (aj < alpha) {
          alpha = std::max(aj, 0.0);
          blocker = j;
          side = Lower;
        }
      }
    }
    z += alpha * p_step;
    if (blocker >= 0) {
      z[blocker] = side == Upper ? hi[blocker] : lo[blocker];
      state[blocker] = side;
    }
  }

  sol.z = z;
  sol.status = QpStatus::MaxIter;
  return sol;
}

}  // namespace skddp
