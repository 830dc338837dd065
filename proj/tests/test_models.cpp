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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "skddp/cost.hpp"
#include "skddp/models.hpp"
#include "test_util.hpp"

using namespace skddp;
using namespace skddp::test;

namespace {

Vec v4(double a, double b, double c, double d) {
  Vec v(4);
  v << a, b, c, d;
  return v;
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

double rel_err(const Mat& got, const Mat& want) {
  const double scale = std::max(1.0, want.cwiseAbs().maxCoeff());
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

TEST_CASE("car step matches the discrete dynamics by substitution") {
  CarModel car(0.02);
  const Vec next = car.step(v4(1, 1, M_PI / 2, 2), v2(0, 1));
  CHECK(next[0] == doctest::Approx(1.04).epsilon(1e-12));
  CHECK(next[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(next[2] == doctest::Approx(M_PI / 2).epsilon(1e-12));
  CHECK(next[3] == doctest::Approx(2.02).epsilon(1e-12));
}

TEST_CASE("car jacobian at theta=0 carries v dt in the x-theta slot") {
  CarModel car(0.02);
  Mat fx, fu;
  car.jacobians(v4(0, 0, 0, 3), v2(0, 0), fx, fu);
  CHECK(fx(0, 2) == doctest::Approx(3 * 0.02).epsilon(1e-12));
}

TEST_CASE("analytic jacobians match central differences") {
  std::mt19937 rng(7);
  CarModel car(0.02);
  CartPoleModel pole(0.02);
  for (int trial = 0; trial < 20; ++trial) {
    {
      const Vec x = random_vec(rng, 4, 2.0);
      const Vec u = random_vec(rng, 2, 3.0);
      Mat fx, fu, fx_fd, fu_fd;
      car.jacobians(x, u, fx, fu);
      fd_jacobians(car, x, u, fx_fd, fu_fd);
      CHECK(rel_err(fx, fx_fd) < 1e-5);
      CHECK(rel_err(fu, fu_fd) < 1e-5);
    }
    {
      const Vec x = random_vec(rng, 4, 1.5);
      const Vec u = random_vec(rng, 1, 5.0);
      Mat fx, fu, fx_fd, fu_fd;
      pole.jacobians(x, u, fx, fu);
      fd_jacobians(pole, x, u, fx_fd, fu_fd);
      CHECK(rel_err(fx, fx_fd) < 1e-5);
      CHECK(rel_err(fu, fu_fd) < 1e-5);
    }
  }
}

TEST_CASE("linear dynamics finite differences recover A and B") {
  std::mt19937 rng(3);
  const Mat a = random_mat(rng, 3, 3);
  const Mat b = random_mat(rng, 3, 2);
  LinearModel lin(a, b, 0.1);
  Mat fx, fu;
  fd_jacobians(lin, random_vec(rng, 3), random_vec(rng, 2), fx, fu);
  CHECK((fx - a).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((fu - b).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("cart pole upright equilibrium is a fixed point") {
  CartPoleParams params;
  params.friction = 0.0;
  CartPoleModel pole(0.02, params);
  const Vec x0 = v4(0, 0, 0, 0);
  const Vec next = pole.step(x0, Vec::Zero(1));
  CHECK((next - x0).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("quadrotor hover balance leaves position and velocity unchanged") {
  QuadrotorModel quad(0.01);
  Vec x = Vec::Zero(12);
  x[0] = 0.3;
  x[1] = -0.2;
  x[2] = 1.0;
  const Vec next = quad.step(x, quad.hover_control());
  CHECK((next - x).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("position block is control independent for every model") {
  std::mt19937 rng(11);
  const CarModel car(0.02);
  const CartPoleModel pole(0.02);
  const QuadrotorModel quad(0.01);
  const DynamicsModel* models[] = {&car, &pole, &quad};
  for (const DynamicsModel* model : models) {
    for (int trial = 0; trial < 5; ++trial) {
      const Vec x = random_vec(rng, model->state_dim(), 0.8);
      const Vec u = random_vec(rng, model->control_dim(), 1.0);
      Mat fx, fu;
      fd_jacobians(*model, x, u, fx, fu);
      for (int idx : model->position_indices()) {
        CHECK(fu.row(idx).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}

TEST_CASE("rollout reproduces the one-step car arithmetic") {
  CarModel car(0.02);
  const Trajectory traj =
      rollout(car, v4(0, 0, 0, 1), {v2(0, 0), v2(0, 0)});
  CHECK(traj.states[1][0] == 0.0);
  CHECK(traj.states[1][1] == doctest::Approx(0.02).epsilon(1e-15));
  CHECK(traj.states[1][2] == 0.0);
  CHECK(traj.states[1][3] == 1.0);
  CHECK(dynamics_defect(car, traj) <= 1e-12);
}

TEST_CASE("rollout of identity dynamics stays at the start") {
  struct Still final : DynamicsModel {
    int state_dim() const override { return 2; }
    int control_dim() const override { return 1; }
    double dt() const override { return 1.0; }
    Vec step(const Vec& x, const Vec&) const override { return x; }
    std::vector<int> position_indices() const override { return {0, 1}; }
  } model;
  std::mt19937 rng(21);
  const Vec x0 = random_vec(rng, 2);
  std::vector<Vec> controls;
  for (int k = 0; k < 7; ++k) controls.push_back(random_vec(rng, 1));
  const Trajectory traj = rollout(model, x0, controls);
  for (const auto& x : traj.states) {
    CHECK((x - x0).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("double integrator rollout matches the closed-form sum") {
  // p' = p + dt v, v' = v + dt u with u = 1: after 10 steps of dt = 0.1
  // the position is dt^2 * sum_{k=0}^{9} k = 0.45.
  const LinearModel di = double_integrator(0.1);
  const Trajectory traj =
      rollout(di, Vec::Zero(2), std::vector<Vec>(10, Vec::Ones(1)));
  CHECK(traj.states[10][0] == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(traj.states[10][1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rollout divergence names the timestep") {
  // Dynamics that explode once the state exceeds a threshold.
  struct Exploding final : DynamicsModel {
    int state_dim() const override { return 1; }
    int control_dim() const override { return 1; }
    double dt() const override { return 1.0; }
    Vec step(const Vec& x, const Vec& u) const override {
      Vec next(1);
      next[0] = x[0] > 2.0 ? std::numeric_limits<double>::quiet_NaN()
                           : x[0] + 1.0 + u[0];
      return next;
    }
    std::vector<int> position_indices() const override { return {}; }
  } model;
  std::vector<Vec> controls(5, Vec::Zero(1));
  try {
    rollout(model, Vec::Zero(1), controls);
    FAIL("expected divergence");
  } catch (const RolloutDivergence& e) {
    CHECK(e.timestep == 3);
  }
}

TEST_CASE("quadratic cost derivatives") {
  Mat q = Mat::Zero(2, 2);
  Mat r(2, 2);
  r << 2, 0, 0, 4;
  const CostModel cost(q, r, Mat::Identity(2, 2), Vec::Zero(2));

  SUBCASE("control gradient of 1/2 u'Ru") {
    const CostDerivs d = cost.stage_derivs(Vec::Zero(2), Vec::Ones(2), 0);
    CHECK(d.lu[0] == doctest::Approx(2.0));
    CHECK(d.lu[1] == doctest::Approx(4.0));
  }

  SUBCASE("all first derivatives vanish at the goal with zero control") {
    Mat qs = 3.0 * Mat::Identity(2, 2);
    Vec goal(2);
    goal << 1, -2;
    const CostModel tracking(qs, r, qs, goal);
    const CostDerivs d = tracking.stage_derivs(goal, Vec::Zero(2), 0);
    CHECK(d.lx.cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.lu.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("random point matches finite differences") {
    std::mt19937 rng(5);
    Mat qs = random_psd(rng, 2);
    const CostModel c2(qs, r, qs, random_vec(rng, 2));
    const Vec x = random_vec(rng, 2), u = random_vec(rng, 2);
    const CostDerivs d = c2.stage_derivs(x, u, 0);
    const double h = 1e-6;
    for (int i = 0; i < 2; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (c2.stage(xp, u, 0) - c2.stage(xm, u, 0)) / (2 * h);
      CHECK(d.lx[i] == doctest::Approx(fd).epsilon(1e-7));
      Vec up = u, um = u;
      up[i] += h;
      um[i] -= h;
      const double fdu = (c2.stage(x, up, 0) - c2.stage(x, um, 0)) / (2 * h);
      CHECK(d.lu[i] == doctest::Approx(fdu).epsilon(1e-7));
    }
  }
}

TEST_CASE("total cost equals an independent term-by-term summation") {
  std::mt19937 rng(9);
  CarModel car(0.02);
  const CostModel cost(random_psd(rng, 4), random_spd(rng, 2),
                       random_psd(rng, 4), random_vec(rng, 4));
  std::vector<Vec> controls;
  for (int k = 0; k < 6; ++k) controls.push_back(random_vec(rng, 2));
  const Trajectory traj = rollout(car, random_vec(rng, 4), controls);

  double expected = 0.0;
  for (int k = 0; k < 6; ++k) {
    expected += cost.stage(traj.states[k], traj.controls[k], k);
  }
  expected += cost.terminal(traj.states[6]);
  CHECK(total_cost(cost, traj) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("single step pure control cost") {
  const CostModel cost(Mat::Zero(1, 1), 2.0 * Mat::Identity(1, 1),
                       Mat::Zero(1, 1), Vec::Zero(1));
  Trajectory traj;
  traj.states = {Vec::Zero(1), Vec::Zero(1)};
  traj.controls = {2.0 * Vec::Ones(1)};
  CHECK(total_cost(cost, traj) == doctest::Approx(4.0));
}

TEST_CASE("obstacle rows are sign-correct") {
  const ObstacleConstraints obs(car_benchmark_obstacles(0.5), 4, 2);
  CHECK(obs.eval(v4(1, 1, 0, 0), v2(0, 0))[0] ==
        doctest::Approx(0.25).epsilon(1e-12));  // inside: violated
  CHECK(obs.eval(v4(1, 1.5, 0, 0), v2(0, 0))[0] ==
        doctest::Approx(0.0).epsilon(1e-12));  // on the boundary
  CHECK(obs.eval(v4(3, 0, 0, 0), v2(0, 0)).maxCoeff() < 0.0);  // outside
}

TEST_CASE("cart pole limit rows") {
  const CartPoleLimits lim(1.5, M_PI / 6);
  CHECK(lim.eval(v4(1.5, 0, 0, 0), Vec::Zero(1))[0] ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(lim.eval(v4(0, 0, M_PI / 6, 0), Vec::Zero(1))[1] ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("position rows have zero control and velocity-block gradients") {
  std::mt19937 rng(13);
  const ObstacleConstraints obs(car_benchmark_obstacles(0.5), 4, 2);
  const CarModel car(0.02);
  const auto vel = car.velocity_indices();
  for (int trial = 0; trial < 10; ++trial) {
    const Vec x = random_vec(rng, 4, 3.0);
    Mat gx, gu;
    obs.jacobians(x, random_vec(rng, 2), gx, gu);
    CHECK(gu.cwiseAbs().maxCoeff() <= 1e-12);
    for (int idx : vel) {
      CHECK(gx.col(idx).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("double integrator position row propagates to C = dt^2") {
  const double dt = 0.1;
  const LinearModel di = double_integrator(dt);
  Vec a(2);
  a << 1.0, 0.0;  // g = p - 1
  const LinearRowConstraint row(a, Vec(), -1.0, ConstraintKind::Position);

  const Trajectory nominal =
      rollout(di, Vec::Zero(2), std::vector<Vec>(5, Vec::Zero(1)));
  const ConstraintLinearization lin = propagate_constraints(row, di, nominal, 0);
  REQUIRE(lin.rows() == 1);
  CHECK(lin.C(0, 0) == doctest::Approx(dt * dt).epsilon(1e-12));
}

TEST_CASE("propagated C and D match finite differences of the composed maps") {
  std::mt19937 rng(17);
  const CarModel car(0.02);
  const CartPoleModel pole(0.02);
  const ObstacleConstraints car_obs(car_benchmark_obstacles(0.5), 4, 2);
  const CartPoleLimits pole_lim(1.5, M_PI / 6);

  auto check_model = [&](const DynamicsModel& model,
                         const ConstraintModel& cmodel, int trials) {
    const int n = model.state_dim();
    const int m = model.control_dim();
    for (int trial = 0; trial < trials; ++trial) {
      std::vector<Vec> controls;
      for (int k = 0; k < 4; ++k) controls.push_back(random_vec(rng, m, 1.0));
      Trajectory nominal;
      try {
        nominal = rollout(model, random_vec(rng, n, 1.5), controls);
      } catch (const RolloutDivergence&) {
        continue;
      }
      const int k = 0;
      const ConstraintLinearization lin =
          propagate_constraints(cmodel, model, nominal, k);

      // Independent oracle: differentiate the composed residual maps.
      auto stacked = [&](const Vec& x, const Vec& u) {
        const Vec zero_u = Vec::Zero(m);
        const Vec x1 = model.step(x, u);
        const Vec x2 = model.step(x1, nominal.controls[k + 1]);
        std::vector<double> vals;
        const Vec g2 = cmodel.eval(x2, zero_u);
        const Vec g1 = cmodel.eval(x1, zero_u);
        const Vec g0 = cmodel.eval(x, u);
        for (int i = 0; i < cmodel.count(); ++i) {
          if (cmodel.kind(i) == ConstraintKind::Position) vals.push_back(g2[i]);
        }
        for (int i = 0; i < cmodel.count(); ++i) {
          if (cmodel.kind(i) == ConstraintKind::Velocity) vals.push_back(g1[i]);
        }
        for (int i = 0; i < cmodel.count(); ++i) {
          if (cmodel.kind(i) == ConstraintKind::Control) vals.push_back(g0[i]);
        }
        Vec out(vals.size());
        for (size_t i = 0; i < vals.size(); ++i) out[i] = vals[i];
        return out;
      };

      const Vec& x = nominal.states[k];
      const Vec& u = nominal.controls[k];
      const double h = 1e-6;
      Mat c_fd(lin.rows(), m), d_fd(lin.rows(), n);
      for (int j = 0; j < m; ++j) {
        Vec up = u, um = u;
        up[j] += h;
        um[j] -= h;
        c_fd.col(j) = (stacked(x, up) - stacked(x, um)) / (2 * h);
      }
      for (int j = 0; j < n; ++j) {
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        d_fd.col(j) = (stacked(xp, u) - stacked(xm, u)) / (2 * h);
      }
      CHECK(rel_err(lin.C, c_fd) < 1e-5);
      CHECK(rel_err(lin.D, d_fd) < 1e-5);
    }
  };

  check_model(car, car_obs, 10);
  check_model(pole, pole_lim, 10);
}

TEST_CASE("position rows are dropped near the horizon edge") {
  const CarModel car(0.02);
  const ObstacleConstraints obs(car_benchmark_obstacles(0.5), 4, 2);
  const Trajectory nominal = rollout(
      car, v4(0, 0, 0, 0), std::vector<Vec>(5, Vec::Zero(2)));
  CHECK(propagate_constraints(obs, car, nominal, 2).rows() == 3);
  CHECK(propagate_constraints(obs, car, nominal, 3).rows() == 0);
  CHECK(propagate_constraints(obs, car, nominal, 4).rows() == 0);
}
