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

#include <random>

#include "skddp/constraints.hpp"
#include "skddp/models.hpp"
#include "skddp/types.hpp"

namespace skddp::test {

inline Vec random_vec(std::mt19937& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

inline Mat random_mat(std::mt19937& rng, int r, int c, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Mat m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = dist(rng);
  }
  return m;
}

inline Mat random_spd(std::mt19937& rng, int n, double shift = 0.5) {
  const Mat a = random_mat(rng, n, n);
  return a * a.transpose() + shift * Mat::Identity(n, n);
}

inline Mat random_psd(std::mt19937& rng, int n) {
  const Mat a = random_mat(rng, n, n);
  return a * a.transpose();
}

/// Discrete Riccati recursion oracle for x'=Ax+Bu with cost
/// 1/2 x'Qx + 1/2 u'Ru and terminal 1/2 x'Qf x. Independent of the DDP
/// implementation path.
struct RiccatiOracle {
  std::vector<Mat> K;  // u = K x (note: feedback only, zero-goal LQR)
  std::vector<Mat> P;

  RiccatiOracle(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
                const Mat& Qf, int N) {
    P.resize(N + 1);
    K.resize(N);
    P[N] = Qf;
    for (int k = N - 1; k >= 0; --k) {
      const Mat btp = B.transpose() * P[k + 1];
      const Mat quu = R + btp * B;
      K[k] = -quu.llt().solve(btp * A);
      P[k] = Q + A.transpose() * P[k + 1] * A +
             A.transpose() * P[k + 1] * B * K[k];
      P[k] = 0.5 * (P[k] + P[k].transpose());
    }
  }

  double optimal_cost(const Vec& x0) const { return 0.5 * x0.dot(P[0] * x0); }
};

/// Single linear constraint row a'x + b'u + c <= 0 with a declared kind,
/// for exercising the partition machinery in isolation.
class LinearRowConstraint final : public ConstraintModel {
 public:
  LinearRowConstraint(Vec a, Vec b, double c, ConstraintKind kind)
      : a_(std::move(a)), b_(std::move(b)), c_(c), kind_(kind) {}

  int count() const override { return 1; }
  ConstraintKind kind(int) const override { return kind_; }
  Vec eval(const Vec& x, const Vec& u) const override {
    Vec g(1);
    g[0] = a_.dot(x) + (b_.size() > 0 ? b_.dot(u) : 0.0) + c_;
    return g;
  }
  void jacobians(const Vec& x, const Vec& u, Mat& gx, Mat& gu) const override {
    gx = a_.transpose();
    gu = b_.size() > 0 ? Mat(b_.transpose())
                       : Mat::Zero(1, u.size());
    (void)x;
  }

 private:
  Vec a_, b_;
  double c_;
  ConstraintKind kind_;
};

/// Double integrator p' = p + dt v, v' = v + dt u as a LinearModel.
inline LinearModel double_integrator(double dt) {
  Mat a(2, 2), b(2, 1);
  a << 1.0, dt, 0.0, 1.0;
  b << 0.0, dt;
  return LinearModel(a, b, dt);
}

}  // namespace skddp::test
