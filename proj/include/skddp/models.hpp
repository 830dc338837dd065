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

#include <memory>

#include "skddp/constraints.hpp"
#include "skddp/cost.hpp"
#include "skddp/dynamics.hpp"

namespace skddp {

/// Planar car with steering-rate and acceleration controls.
/// State [x, y, theta, v], control [u_theta, u_v]:
///   x'     = x + v sin(theta) dt
///   y'     = y + v cos(theta) dt
///   theta' = theta + u_theta v dt
///   v'     = v + u_v dt
class CarModel final : public DynamicsModel {
 public:
  explicit CarModel(double dt = 0.02) : dt_(dt) {}

  int state_dim() const override { return 4; }
  int control_dim() const override { return 2; }
  double dt() const override { return dt_; }
  Vec step(const Vec& x, const Vec& u) const override;
  void jacobians(const Vec& x, const Vec& u, Mat& fx, Mat& fu) const override;
  std::vector<int> position_indices() const override { return {0, 1}; }

 private:
  double dt_;
};

struct CartPoleParams {
  double cart_mass{1.0};
  double pole_mass{0.2};
  double pole_length{0.5};
  double friction{0.1};
  double gravity{9.81};
};

/// Cart pole with state [x, xdot, theta, thetadot] (theta = 0 upright) and
/// a single thrust-force control, integrated with explicit Euler.
class CartPoleModel final : public DynamicsModel {
 public:
  explicit CartPoleModel(double dt = 0.02, CartPoleParams p = {})
      : dt_(dt), p_(p) {}

  int state_dim() const override { return 4; }
  int control_dim() const override { return 1; }
  double dt() const override { return dt_; }
  Vec step(const Vec& x, const Vec& u) const override;
  void jacobians(const Vec& x, const Vec& u, Mat& fx, Mat& fu) const override;
  std::vector<int> position_indices() const override { return {0, 2}; }

  const CartPoleParams& params() const { return p_; }

 private:
  double dt_;
  CartPoleParams p_;
};

struct QuadrotorParams {
  double mass{0.5};
  double gravity{9.81};
  double inertia_xx{4.856e-3};
  double inertia_yy{4.856e-3};
  double inertia_zz{8.801e-3};
  double arm_length{0.225};
  double torque_coeff{0.016};
};

/// Rigid-body quadrotor: state [p(3), euler(3), v(3), omega(3)], controls
/// are the four rotor thrusts. Jacobians via finite differences.
class QuadrotorModel final : public DynamicsModel {
 public:
  explicit QuadrotorModel(double dt = 0.01, QuadrotorParams p = {})
      : dt_(dt), p_(p) {}

  int state_dim() const override { return 12; }
  int control_dim() const override { return 4; }
  double dt() const override { return dt_; }
  Vec step(const Vec& x, const Vec& u) const override;
  std::vector<int> position_indices() const override {
    return {0, 1, 2, 3, 4, 5};
  }

  /// Per-rotor thrust balancing gravity.
  Vec hover_control() const;
  const QuadrotorParams& params() const { return p_; }

 private:
  double dt_;
  QuadrotorParams p_;
};

/// x' = A x + B u, for LQR oracles and synthetic constraint tests.
class LinearModel final : public DynamicsModel {
 public:
  LinearModel(Mat A, Mat B, double dt);

  int state_dim() const override { return static_cast<int>(A_.rows()); }
  int control_dim() const override { return static_cast<int>(B_.cols()); }
  double dt() const override { return dt_; }
  Vec step(const Vec& x, const Vec& u) const override { return A_ * x + B_ * u; }
  void jacobians(const Vec& x, const Vec& u, Mat& fx, Mat& fu) const override {
    (void)x;
    (void)u;
    fx = A_;
    fu = B_;
  }
  /// Rows of B that vanish identically are position-like.
  std::vector<int> position_indices() const override;

  const Mat& A() const { return A_; }
  const Mat& B() const { return B_; }

 private:
  Mat A_, B_;
  double dt_;
};

struct SphereObstacle {
  Vec center;  // dimension = number of spatial coordinates covered
  double radius{0.5};
};

/// Obstacle rows r^2 - ||x_pos - c||^2 <= 0 on the leading spatial
/// coordinates of the state (2 for the car, 3 for the quadrotor).
class ObstacleConstraints final : public ConstraintModel {
 public:
  ObstacleConstraints(std::vector<SphereObstacle> obstacles, int state_dim,
                      int control_dim);

  int count() const override { return static_cast<int>(obstacles_.size()); }
  ConstraintKind kind(int) const override { return ConstraintKind::Position; }
  Vec eval(const Vec& x, const Vec& u) const override;
  void jacobians(const Vec& x, const Vec& u, Mat& gx, Mat& gu) const override;
  Mat row_hessian_xx(int row, const Vec& x, const Vec& u) const override;

  const std::vector<SphereObstacle>& obstacles() const { return obstacles_; }

 private:
  std::vector<SphereObstacle> obstacles_;
  int n_, m_, spatial_;
};

/// Cart pole limits [x^2 - x_lim^2; theta - theta_lim] <= 0 (one-sided in
/// the angle).
class CartPoleLimits final : public ConstraintModel {
 public:
  CartPoleLimits(double x_lim, double theta_lim)
      : x_lim_(x_lim), theta_lim_(theta_lim) {}

  int count() const override { return 2; }
  ConstraintKind kind(int) const override { return ConstraintKind::Position; }
  Vec eval(const Vec& x, const Vec& u) const override;
  void jacobians(const Vec& x, const Vec& u, Mat& gx, Mat& gu) const override;
  Mat row_hessian_xx(int row, const Vec& x, const Vec& u) const override;

  double x_lim() const { return x_lim_; }
  double theta_lim() const { return theta_lim_; }

 private:
  double x_lim_, theta_lim_;
};

/// Benchmark tracking costs: no running state cost by default, 1e-2
/// control weight, heavy terminal weight on position and angle components
/// and a light one on velocities.
struct BenchmarkWeights {
  double terminal_heavy{400.0};
  double terminal_light{40.0};
  double control{1e-2};
  double state{0.0};
};

std::shared_ptr<CostModel> car_benchmark_cost(BenchmarkWeights w = {});
std::shared_ptr<CostModel> cart_pole_benchmark_cost(BenchmarkWeights w = {});
std::shared_ptr<CostModel> quadrotor_benchmark_cost(BenchmarkWeights w = {});

/// Car benchmark fixtures: goal [3, 3, pi/2, 0] and three unit-diameter
/// obstacles.
Vec car_benchmark_goal();
std::vector<SphereObstacle> car_benchmark_obstacles(double radius = 0.5);
std::vector<Vec> car_benchmark_starts();

/// Quadrotor benchmark fixtures: position goal [1, 5, 5] and obstacles on
/// the way from the hover starts.
Vec quadrotor_benchmark_goal();
std::vector<SphereObstacle> quadrotor_benchmark_obstacles();
std::vector<Vec> quadrotor_benchmark_starts();

/// Cart pole benchmark fixtures. The displaced cart start makes the
/// unconstrained push-off transient overshoot the position limit.
Vec cart_pole_benchmark_start();
double cart_pole_x_lim();
double cart_pole_theta_lim();

}  // namespace skddp
