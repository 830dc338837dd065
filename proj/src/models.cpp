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

#include "skddp/models.hpp"

#include <cmath>

namespace skddp {

Vec CarModel::step(const Vec& x, const Vec& u) const {
  Vec next(4);
  const double theta = x[2];
  const double v = x[3];
  next[0] = x[0] + v * std::sin(theta) * dt_;
  next[1] = x[1] + v * std::cos(theta) * dt_;
  next[2] = x[2] + u[0] * v * dt_;
  next[3] = x[3] + u[1] * dt_;
  return next;
}

void CarModel::jacobians(const Vec& x, const Vec& u, Mat& fx, Mat& fu) const {
  const double theta = x[2];
  const double v = x[3];
  fx = Mat::Identity(4, 4);
  fx(0, 2) = v * std::cos(theta) * dt_;
  fx(0, 3) = std::sin(theta) * dt_;
  fx(1, 2) = -v * std::sin(theta) * dt_;
  fx(1, 3) = std::cos(theta) * dt_;
  fx(2, 3) = u[0] * dt_;
  fu = Mat::Zero(4, 2);
  fu(2, 0) = v * dt_;
  fu(3, 1) = dt_;
}

namespace {

struct CartPoleAccel {
  double xdd, tdd;
  double dxdd_dxd, dxdd_dth, dxdd_dtd, dxdd_du;
  double dtdd_dxd, dtdd_dth, dtdd_dtd, dtdd_du;
};

CartPoleAccel cart_pole_accel(const CartPoleParams& p, double xd, double th,
                              double td, double u) {
  const double M = p.cart_mass, m = p.pole_mass, l = p.pole_length;
  const double b = p.friction, G = p.gravity;
  const double s = std::sin(th), c = std::cos(th);
  const double den = M + m * s * s;
  const double dden = 2.0 * m * s * c;

  const double a1 = u - b * xd + m * (l + td * td - G * c) * s;
  const double da1_dth = m * (G * s * s + (l + td * td - G * c) * c);
  const double a2 = G * (M + m) * s - (u - b * xd + m * l * td * td * s) * c;
  const double da2_dth = G * (M + m) * c - m * l * td * td * c * c +
                         (u - b * xd + m * l * td * td * s) * s;

  CartPoleAccel out;
  out.xdd = a1 / den;
  out.dxdd_dxd = -b / den;
  out.dxdd_dth = (da1_dth * den - a1 * dden) / (den * den);
  out.dxdd_dtd = 2.0 * m * td * s / den;
  out.dxdd_du = 1.0 / den;

  const double lden = l * den;
  out.tdd = a2 / lden;
  out.dtdd_dxd = b * c / lden;
  out.dtdd_dth = da2_dth / lden - a2 * dden / (l * den * den);
  out.dtdd_dtd = -2.0 * m * l * td * s * c / lden;
  out.dtdd_du = -c / lden;
  return out;
}

}  // namespace

Vec CartPoleModel::step(const Vec& x, const Vec& u) const {
  const CartPoleAccel a = cart_pole_accel(p_, x[1], x[2], x[3], u[0]);
  Vec next(4);
  next[0] = x[0] + dt_ * x[1];
  next[1] = x[1] + dt_ * a.xdd;
  next[2] = x[2] + dt_ * x[3];
  next[3] = x[3] + dt_ * a.tdd;
  return next;
}

void CartPoleModel::jacobians(const Vec& x, const Vec& u, Mat& fx,
                              Mat& fu) const {
  const CartPoleAccel a = cart_pole_accel(p_, x[1], x[2], x[3], u[0]);
  fx = Mat::Identity(4, 4);
  fx(0, 1) = dt_;
  fx(1, 1) += dt_ * a.dxdd_dxd;
  fx(1, 2) = dt_ * a.dxdd_dth;
  fx(1, 3) = dt_ * a.dxdd_dtd;
  fx(2, 3) = dt_;
  fx(3, 1) = dt_ * a.dtdd_dxd;
  fx(3, 2) = dt_ * a.dtdd_dth;
  fx(3, 3) += dt_ * a.dtdd_dtd;
  fu = Mat::Zero(4, 1);
  fu(1, 0) = dt_ * a.dxdd_du;
  fu(3, 0) = dt_ * a.dtdd_du;
}

Vec QuadrotorModel::step(const Vec& x, const Vec& u) const {
  const double m = p_.mass, G = p_.gravity;
  const double phi = x[3], th = x[4], psi = x[5];
  const Eigen::Vector3d v = x.segment<3>(6);
  const Eigen::Vector3d w = x.segment<3>(9);

  const double cphi = std::cos(phi), sphi = std::sin(phi);
  const double cth = std::cos(th), sth = std::sin(th);
  const double cpsi = std::cos(psi), spsi = std::sin(psi);

  const double thrust = u.sum();
  // Body z axis in world frame (ZYX Euler).
  const Eigen::Vector3d body_z(cpsi * sth * cphi + spsi * sphi,
                               spsi * sth * cphi - cpsi * sphi, cth * cphi);

  // Euler-rate kinematics, singular at |pitch| = pi/2.
  Eigen::Matrix3d winv;
  const double tth = sth / cth;
  winv << 1.0, sphi * tth, cphi * tth,  //
      0.0, cphi, -sphi,                 //
      0.0, sphi / cth, cphi / cth;

  const Eigen::Vector3d inertia(p_.inertia_xx, p_.inertia_yy, p_.inertia_zz);
  const Eigen::Vector3d tau(p_.arm_length * (u[1] - u[3]),
                            p_.arm_length * (u[2] - u[0]),
                            p_.torque_coeff * (u[0] - u[1] + u[2] - u[3]));
  const Eigen::Vector3d iw = inertia.cwiseProduct(w);
  const Eigen::Vector3d wdot =
      (tau - w.cross(iw)).cwiseQuotient(inertia);

  Vec next(12);
  next.segment<3>(0) = x.segment<3>(0) + dt_ * v;
  next.segment<3>(3) = x.segment<3>(3) + dt_ * (winv * w);
  next.segment<3>(6) =
      v + dt_ * (Eigen::Vector3d(0, 0, -G) + (thrust / m) * body_z);
  next.segment<3>(9) = w + dt_ * wdot;
  return next;
}

Vec QuadrotorModel::hover_control() const {
  return Vec::Constant(4, p_.mass * p_.gravity / 4.0);
}

LinearModel::LinearModel(Mat A, Mat B, double dt)
    : A_(std::move(A)), B_(std::move(B)), dt_(dt) {
  if (A_.rows() != A_.cols() || B_.rows() != A_.rows()) {
    throw DimensionError("LinearModel: inconsistent A/B dimensions");
  }
}

std::vector<int> LinearModel::position_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < A_.rows(); ++i) {
    if (B_.row(i).cwiseAbs().maxCoeff() == 0.0) idx.push_back(i);
  }
  return idx;
}

ObstacleConstraints::ObstacleConstraints(std::vector<SphereObstacle> obstacles,
                                         int state_dim, int control_dim)
    : obstacles_(std::move(obstacles)), n_(state_dim), m_(control_dim) {
  spatial_ = obstacles_.empty() ? 0
                                : static_cast<int>(obstacles_.front().center
                                                       .size());
  for (const auto& o : obstacles_) {
    if (o.center.size() != spatial_) {
      throw DimensionError("ObstacleConstraints: mixed center dimensions");
    }
  }
}

Vec ObstacleConstraints::eval(const Vec& x, const Vec&) const {
  Vec g(count());
  for (int i = 0; i < count(); ++i) {
    const Vec d = x.head(spatial_) - obstacles_[i].center;
    g[i] = obstacles_[i].radius * obstacles_[i].radius - d.squaredNorm();
  }
  return g;
}

void ObstacleConstraints::jacobians(const Vec& x, const Vec&, Mat& gx,
                                    Mat& gu) const {
  gx = Mat::Zero(count(), n_);
  gu = Mat::Zero(count(), m_);
  for (int i = 0; i < count(); ++i) {
    gx.row(i).head(spatial_) =
        -2.0 * (x.head(spatial_) - obstacles_[i].center).transpose();
  }
}

Mat ObstacleConstraints::row_hessian_xx(int, const Vec&, const Vec&) const {
  Mat h = Mat::Zero(n_, n_);
  h.topLeftCorner(spatial_, spatial_) =
      -2.0 * Mat::Identity(spatial_, spatial_);
  return h;
}

Vec CartPoleLimits::eval(const Vec& x, const Vec&) const {
  Vec g(2);
  g[0] = x[0] * x[0] - x_lim_ * x_lim_;
  g[1] = x[2] - theta_lim_;
  return g;
}

void CartPoleLimits::jacobians(const Vec& x, const Vec&, Mat& gx,
                               Mat& gu) const {
  gx = Mat::Zero(2, 4);
  gu = Mat::Zero(2, 1);
  gx(0, 0) = 2.0 * x[0];
  gx(1, 2) = 1.0;
}

Mat CartPoleLimits::row_hessian_xx(int row, const Vec&, const Vec&) const {
  Mat h = Mat::Zero(4, 4);
  if (row == 0) h(0, 0) = 2.0;
  return h;
}

namespace {

std::shared_ptr<CostModel> tracking_cost(int n, int m, const Vec& goal,
                                         const Vec& u_ref,
                                         const std::vector<int>& heavy,
                                         const BenchmarkWeights& w) {
  Mat qf = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) qf(i, i) = w.terminal_light;
  for (int i : heavy) qf(i, i) = w.terminal_heavy;
  return std::make_shared<CostModel>(w.state * Mat::Identity(n, n),
                                     w.control * Mat::Identity(m, m), qf,
                                     goal, u_ref);
}

}  // namespace

std::shared_ptr<CostModel> car_benchmark_cost(BenchmarkWeights w) {
  // Heavy terminal weight on x, y and the heading angle.
  return tracking_cost(4, 2, car_benchmark_goal(), Vec::Zero(2), {0, 1, 2},
                       w);
}

std::shared_ptr<CostModel> cart_pole_benchmark_cost(BenchmarkWeights w) {
  return tracking_cost(4, 1, Vec::Zero(4), Vec::Zero(1), {0, 2}, w);
}

std::shared_ptr<CostModel> quadrotor_benchmark_cost(BenchmarkWeights w) {
  const QuadrotorModel quad;
  return tracking_cost(12, 4, quadrotor_benchmark_goal(),
                       quad.hover_control(), {0, 1, 2, 3, 4, 5}, w);
}

Vec car_benchmark_goal() {
  Vec g(4);
  g << 3.0, 3.0, M_PI / 2.0, 0.0;
  return g;
}

std::vector<SphereObstacle> car_benchmark_obstacles(double radius) {
  auto center = [](double x, double y) {
    Vec c(2);
    c << x, y;
    return c;
  };
  return {{center(1.0, 1.0), radius},
          {center(1.0, 2.5), radius},
          {center(2.5, 2.5), radius}};
}

std::vector<Vec> car_benchmark_starts() {
  auto state = [](double x, double y, double th, double v) {
    Vec s(4);
    s << x, y, th, v;
    return s;
  };
  return {state(0.0, 0.0, 0.0, 0.0),   state(1.5, 0.0, 0.0, 0.0),
          state(3.0, 0.0, 0.0, 0.0),   state(-0.5, 1.5, M_PI / 4.0, 0.0),
          state(3.5, 1.0, 0.0, 0.0),   state(0.5, 3.5, M_PI / 2.0, 0.0)};
}

Vec quadrotor_benchmark_goal() {
  Vec g = Vec::Zero(12);
  g[0] = 1.0;
  g[1] = 5.0;
  g[2] = 5.0;
  return g;
}

std::vector<SphereObstacle> quadrotor_benchmark_obstacles() {
  auto center = [](double x, double y, double z) {
    Vec c(3);
    c << x, y, z;
    return c;
  };
  return {{center(0.5, 2.0, 2.0), 0.5},
          {center(1.2, 3.5, 3.2), 0.5},
          {center(0.2, 3.0, 4.0), 0.5}};
}

std::vector<Vec> quadrotor_benchmark_starts() {
  auto hover = [](double x, double y, double z) {
    Vec s = Vec::Zero(12);
    s[0] = x;
    s[1] = y;
    s[2] = z;
    return s;
  };
  return {hover(0.0, 0.0, 0.0), hover(1.5, 0.5, 0.5), hover(-0.5, 0.5, 1.0),
          hover(0.5, -0.5, 0.0)};
}

Vec cart_pole_benchmark_start() {
  Vec s(4);
  s << 1.49, 0.0, 0.0, 0.0;
  return s;
}

double cart_pole_x_lim() { return 1.5; }
double cart_pole_theta_lim() { return M_PI / 6.0; }

}  // namespace skddp
