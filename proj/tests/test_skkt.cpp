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

#include "skddp/models.hpp"
#include "skddp/skkt.hpp"
#include "test_util.hpp"

using namespace skddp;
using namespace skddp::test;

namespace {

// Dense assembly of the rescaled 3-block KKT system
//   [Quu     0    C'Lam] [du]   [a    ]
//   [0      LamS  SLam ] [dp] = [b    ]
//   [LamC   LamS  0    ] [dq]   [Lam d]
// solved monolithically; the analytic path must satisfy it.
struct DenseKkt {
  Mat sys;
  Vec rhs;

  DenseKkt(const QExpansion& q, const ConstraintLinearization& lin,
           const SlackDualState& st, double mu_sigma, const Vec& dx) {
    const int m = static_cast<int>(q.quu.rows());
    const int w = lin.rows();
    const Mat lam = st.lambda.asDiagonal();
    const Mat s = st.s.asDiagonal();
    sys = Mat::Zero(m + 2 * w, m + 2 * w);
    sys.topLeftCorner(m, m) = q.quu;
    sys.block(0, m + w, m, w) = lin.C.transpose() * lam;
    sys.block(m, m, w, w) = lam * s;
    sys.block(m, m + w, w, w) = s * lam;
    sys.block(m + w, 0, w, m) = lam * lin.C;
    sys.block(m + w, m, w, w) = lam * s;

    rhs.resize(m + 2 * w);
    rhs.head(m) = -q.qu - q.qux * dx - lin.C.transpose() * st.lambda;
    rhs.segment(m, w) = -(st.s.array() * st.lambda.array()).matrix() +
                        mu_sigma * Vec::Ones(w);
    rhs.tail(w) =
        -(st.lambda.array() *
          (lin.D * dx + lin.g + st.s).array())
             .matrix();
  }
};

QExpansion random_q(std::mt19937& rng, int n, int m) {
  QExpansion q;
  q.qx = random_vec(rng, n);
  q.qu = random_vec(rng, m);
  q.qxx = random_psd(rng, n);
  q.qux = random_mat(rng, m, n);
  q.quu = random_spd(rng, m, 1.0);
  return q;
}

ConstraintLinearization random_lin(std::mt19937& rng, int w, int n, int m) {
  ConstraintLinearization lin;
  lin.g = random_vec(rng, w, 0.8);
  lin.C = random_mat(rng, w, m);
  lin.D = random_mat(rng, w, n);
  lin.n_control = w;
  return lin;
}

std::shared_ptr<CostModel> car_cost() { return car_benchmark_cost(); }

Problem car_problem(const Vec& start, double radius = 0.5) {
  Problem p;
  p.dynamics = std::make_shared<CarModel>(0.02);
  p.cost = car_cost();
  p.constraints = std::make_shared<ObstacleConstraints>(
      car_benchmark_obstacles(radius), 4, 2);
  p.x0 = start;
  p.horizon = 100;
  return p;
}

}  // namespace

TEST_CASE("slack initialization") {
  Vec g(1);
  g << -0.5;
  SlackDualState st = init_slack_dual(g, 1e-4);
  CHECK(st.s[0] == doctest::Approx(0.5));
  CHECK(st.lambda[0] == doctest::Approx(1.0));

  g << 0.2;  // violated row gets the floor
  CHECK(init_slack_dual(g, 1e-4).s[0] == doctest::Approx(1e-4));
  g << -1e-6;
  CHECK(init_slack_dual(g, 1e-4).s[0] == doctest::Approx(1e-4));
}

TEST_CASE("duality measure") {
  SlackDualState st;
  st.s = Vec::Ones(5);
  st.lambda = Vec::Ones(5);
  CHECK(duality_measure(st) == doctest::Approx(1.0));

  st.s = Vec(2);
  st.s << 2, 0;
  st.lambda = Vec(2);
  st.lambda << 1, 5;
  CHECK(duality_measure(st) == doctest::Approx(1.0));

  std::mt19937 rng(1);
  st.s = random_vec(rng, 4).cwiseAbs();
  st.lambda = random_vec(rng, 4).cwiseAbs();
  double dot = 0.0;
  for (int i = 0; i < 4; ++i) dot += st.s[i] * st.lambda[i];
  CHECK(duality_measure(st) == doctest::Approx(dot / 4.0).epsilon(1e-14));

  st.s = Vec(0);
  st.lambda = Vec(0);
  CHECK_THROWS_AS(duality_measure(st), std::invalid_argument);
}

TEST_CASE("centering parameter") {
  SlackDualState st;
  st.s = Vec::Constant(3, 2.0);
  st.lambda = Vec::Constant(3, 0.7);
  CHECK(centering(st, duality_measure(st)) == doctest::Approx(0.0));

  // xi = 0.5: sigma = 0.1 * 0.05^3
  st.s = Vec(2);
  st.s << 1.0, 3.0;
  st.lambda = Vec::Ones(2);
  CHECK(centering(st, duality_measure(st)) ==
        doctest::Approx(0.1 * std::pow(0.05, 3)).epsilon(1e-12));

  // Saturated branch: xi small enough that 0.05 (1-xi)/xi >= 2.
  st.s << 1e-4, 10.0;
  CHECK(centering(st, duality_measure(st)) == doctest::Approx(0.8));

  std::mt19937 rng(2);
  for (int i = 0; i < 50; ++i) {
    st.s = random_vec(rng, 4).cwiseAbs() + 1e-6 * Vec::Ones(4);
    st.lambda = random_vec(rng, 4).cwiseAbs() + 1e-6 * Vec::Ones(4);
    const double sigma = centering(st, duality_measure(st));
    CHECK(sigma >= 0.0);
    CHECK(sigma <= 0.8);
  }
}

TEST_CASE("scalar KKT instance solved by hand") {
  QExpansion q;
  q.quu = Mat::Identity(1, 1);
  q.qu = Vec::Ones(1);
  q.qux = Mat::Zero(1, 1);
  ConstraintLinearization lin;
  lin.g = -Vec::Ones(1);
  lin.C = Mat::Identity(1, 1);
  lin.D = Mat::Zero(1, 1);
  SlackDualState st;
  st.s = Vec::Ones(1);
  st.lambda = Vec::Ones(1);

  const KktStep step = solve_kkt_nominal(q, lin, st, 0.0);
  CHECK(step.dq[0] == doctest::Approx(-1.5));
  CHECK(step.dp[0] == doctest::Approx(0.5));
  CHECK(step.du[0] == doctest::Approx(-0.5));

  const DenseKkt dense(q, lin, st, 0.0, Vec::Zero(1));
  Vec z(3);
  z << step.du[0], step.dp[0], step.dq[0];
  CHECK((dense.sys * z - dense.rhs).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("analytic KKT solve satisfies the dense system") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 4);
    const int w = 1 + static_cast<int>(rng() % 6);
    const QExpansion q = random_q(rng, 3, m);
    const ConstraintLinearization lin = random_lin(rng, w, 3, m);
    SlackDualState st;
    st.s = random_vec(rng, w).cwiseAbs() + 0.05 * Vec::Ones(w);
    st.lambda = random_vec(rng, w).cwiseAbs() + 0.05 * Vec::Ones(w);
    const double mu_sigma = 0.1 * std::abs(random_vec(rng, 1)[0]);

    const KktStep step = solve_kkt_nominal(q, lin, st, mu_sigma);
    const DenseKkt dense(q, lin, st, mu_sigma, Vec::Zero(3));
    Vec z(m + 2 * w);
    z << step.du, step.dp, step.dq;
    CHECK((dense.sys * z - dense.rhs).lpNorm<Eigen::Infinity>() <= 1e-9);

    // Scaled variables recover the raw steps exactly.
    CHECK((step.ds - (st.s.array() * step.dp.array()).matrix())
              .lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((step.dlambda - (st.lambda.array() * step.dq.array()).matrix())
              .lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("empty constraint block reduces to the Newton step") {
  std::mt19937 rng(4);
  const QExpansion q = random_q(rng, 3, 2);
  ConstraintLinearization lin;
  lin.g = Vec(0);
  lin.C = Mat(0, 2);
  lin.D = Mat(0, 3);
  SlackDualState st;
  st.s = Vec(0);
  st.lambda = Vec(0);
  const KktStep step = solve_kkt_nominal(q, lin, st, 0.0);
  CHECK((q.quu * step.du + q.qu).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("fraction to boundary") {
  SlackDualState st;
  st.s = Vec::Ones(1);
  st.lambda = Vec::Ones(1);

  SUBCASE("nonnegative steps give alpha = 1") {
    CHECK(fraction_to_boundary(st, Vec::Ones(1), Vec::Ones(1), 0.9) == 1.0);
  }

  SUBCASE("stated formula on a shrinking slack") {
    Vec ds(1), dl(1);
    ds << -2.0;
    dl << 0.5;
    CHECK(fraction_to_boundary(st, ds, dl, 0.9) == doctest::Approx(0.45));
  }

  SUBCASE("positivity holds after random negative steps") {
    std::mt19937 rng(5);
    for (int i = 0; i < 200; ++i) {
      SlackDualState r;
      r.s = random_vec(rng, 5).cwiseAbs() + 1e-3 * Vec::Ones(5);
      r.lambda = random_vec(rng, 5).cwiseAbs() + 1e-3 * Vec::Ones(5);
      const Vec ds = random_vec(rng, 5, 2.0);
      const Vec dl = random_vec(rng, 5, 2.0);
      const double alpha = fraction_to_boundary(r, ds, dl, 0.99);
      CHECK(alpha > 0.0);
      CHECK(alpha <= 1.0);
      CHECK(((r.s + alpha * ds).array() > 0.0).all());
      CHECK(((r.lambda + alpha * dl).array() > 0.0).all());
    }
  }
}

TEST_CASE("nominal update of g and Qu") {
  SUBCASE("scalar residual closes exactly") {
    ConstraintLinearization lin;
    lin.g = -Vec::Ones(1);
    lin.C = 2.0 * Mat::Identity(1, 1);
    lin.D = Mat::Zero(1, 1);
    QExpansion q;
    q.quu = Mat::Identity(1, 1);
    q.qu = Vec::Zero(1);
    update_nominal(lin, q, 0.5, Vec::Ones(1));
    CHECK(lin.g[0] == doctest::Approx(0.0));

    // Degenerate step leaves everything untouched.
    const double qu_before = q.qu[0];
    update_nominal(lin, q, 0.0, Vec::Ones(1));
    CHECK(lin.g[0] == doctest::Approx(0.0));
    CHECK(q.qu[0] == qu_before);
  }

  SUBCASE("Qu update matches the gradient of the shifted quadratic model") {
    std::mt19937 rng(6);
    QExpansion q = random_q(rng, 3, 2);
    const QExpansion q0 = q;
    ConstraintLinearization lin = random_lin(rng, 2, 3, 2);
    const Vec du = random_vec(rng, 2);
    const double alpha = 0.7;
    update_nominal(lin, q, alpha, du);
    // gradient of 1/2 v'Quu v + Qu0'v at v = alpha du
    const Vec expected = q0.qu + q0.quu * (alpha * du);
    CHECK((q.qu - expected).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((q.quu - q0.quu).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("inner loop behavior") {
  InteriorPointOptions opts;

  SUBCASE("far-inactive constraint converges fast to the Newton step") {
    std::mt19937 rng(7);
    QExpansion q = random_q(rng, 3, 2);
    const Vec newton = q.quu.llt().solve(-q.qu);
    ConstraintLinearization lin;
    lin.g = Vec::Constant(1, -1000.0);  // miles from the boundary
    lin.C = 1e-6 * random_mat(rng, 1, 2);
    lin.D = random_mat(rng, 1, 3);

    {
      QExpansion qc = q;
      ConstraintLinearization lc = lin;
      const InnerLoopResult r = skkt_inner_loop(qc, lc, opts);
      CHECK(r.iterations <= 3);
      CHECK_FALSE(r.capped);
    }
    {
      // Each iteration cuts the Newton-step residual by 1 - zeta; a tighter
      // duality exit buys the third cut needed for 1e-6 agreement.
      InteriorPointOptions tight = opts;
      tight.mu_ratio_tol = 1e-6;
      QExpansion qc = q;
      ConstraintLinearization lc = lin;
      const InnerLoopResult r = skkt_inner_loop(qc, lc, tight);
      CHECK_FALSE(r.capped);
      CHECK((r.du_accumulated - newton).lpNorm<Eigen::Infinity>() < 1e-6);
    }
  }

  SUBCASE("no rows skips the loop") {
    std::mt19937 rng(8);
    QExpansion q = random_q(rng, 3, 2);
    ConstraintLinearization lin;
    lin.g = Vec(0);
    lin.C = Mat(0, 2);
    lin.D = Mat(0, 3);
    const InnerLoopResult r = skkt_inner_loop(q, lin, opts);
    CHECK(r.iterations == 0);
    CHECK(r.du_accumulated.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("active scalar constraint meets the duality exit") {
    QExpansion q;
    q.quu = Mat::Identity(1, 1);
    q.qu = 2.0 * Vec::Ones(1);  // pushes into the constraint
    q.qux = Mat::Zero(1, 1);
    ConstraintLinearization lin;
    lin.g = Vec::Constant(1, -0.1);
    lin.C = -Mat::Identity(1, 1);  // g + C du <= 0 blocks du < -0.1... du > 0.1
    lin.D = Mat::Zero(1, 1);
    const InnerLoopResult r = skkt_inner_loop(q, lin, opts);
    CHECK_FALSE(r.capped);
    CHECK(r.mu_ratio <= opts.mu_ratio_tol);
    CHECK(r.state.s.minCoeff() > 0.0);
    CHECK(r.state.lambda.minCoeff() > 0.0);
  }
}

TEST_CASE("constrained gains") {
  SUBCASE("no rows reduce to unconstrained gains exactly") {
    std::mt19937 rng(9);
    const QExpansion q = random_q(rng, 3, 2);
    ConstraintLinearization lin;
    lin.g = Vec(0);
    lin.C = Mat(0, 2);
    lin.D = Mat(0, 3);
    SlackDualState st;
    st.s = Vec(0);
    st.lambda = Vec(0);
    const ConstrainedGains cg = constrained_gains(q, lin, st);
    const Gains ug = unconstrained_gains(q);
    CHECK((cg.k - ug.k).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((cg.K - ug.K).cwiseAbs().maxCoeff() == 0.0);
    CHECK((cg.H - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("gain law solves the perturbed dense system") {
    std::mt19937 rng(10);
    for (int trial = 0; trial < 100; ++trial) {
      const int m = 1 + static_cast<int>(rng() % 3);
      const int w = 1 + static_cast<int>(rng() % 4);
      QExpansion q = random_q(rng, 4, m);
      ConstraintLinearization lin = random_lin(rng, w, 4, m);
      SlackDualState st;
      st.s = random_vec(rng, w).cwiseAbs() + 0.05 * Vec::Ones(w);
      st.lambda = random_vec(rng, w).cwiseAbs() + 0.05 * Vec::Ones(w);
      const ConstrainedGains cg = constrained_gains(q, lin, st);

      const Vec dx = 0.1 * random_vec(rng, 4);
      const DenseKkt dense(q, lin, st, 0.0, dx);
      const Vec z = dense.sys.fullPivLu().solve(dense.rhs);
      const Vec du_dense = z.head(m);
      const Vec du_gains = cg.k + cg.K * dx;
      CHECK((du_dense - du_gains).lpNorm<Eigen::Infinity>() < 1e-8);

      // Affine law: dx = 0 recovers the feedforward exactly.
      const DenseKkt dense0(q, lin, st, 0.0, Vec::Zero(4));
      const Vec du0 = dense0.sys.fullPivLu().solve(dense0.rhs).head(m);
      CHECK((du0 - cg.k).lpNorm<Eigen::Infinity>() < 1e-8);
    }
  }
}

TEST_CASE("backward pass reduces to unconstrained DDP without rows") {
  std::mt19937 rng(11);
  auto model = std::make_shared<CarModel>(0.02);
  auto cost = car_cost();
  std::vector<Vec> controls;
  for (int k = 0; k < 20; ++k) controls.push_back(random_vec(rng, 2, 0.5));
  const Trajectory nominal =
      rollout(*model, Vec::Zero(4), controls);
  const RegState reg = SolverOptions{}.reg.initial();

  const SkktBackwardResult sk =
      skkt_backward_pass(*model, *cost, nullptr, nominal, reg, {});
  const BackwardPassResult ddp = ddp_backward_pass(*model, *cost, nominal, reg);
  REQUIRE(sk.ok);
  REQUIRE(ddp.ok);
  for (int k = 0; k < 20; ++k) {
    CHECK((sk.steps[k].k - ddp.gains[k].k).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((sk.steps[k].K - ddp.gains[k].K).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("car backward pass keeps interior-point mechanics sound") {
  auto p = car_problem(car_benchmark_starts()[0]);
  const Trajectory nominal = rollout(
      *p.dynamics, p.x0, std::vector<Vec>(p.horizon, Vec::Zero(2)));
  const SkktBackwardResult bp =
      skkt_backward_pass(*p.dynamics, *p.cost, p.constraints.get(), nominal,
                         SolverOptions{}.reg.initial(), {});
  REQUIRE(bp.ok);
  for (const auto& d : bp.step_diags) {
    if (d.constraint_rows == 0) continue;
    CHECK(d.min_slack > 0.0);
    CHECK(d.min_lambda > 0.0);
    if (!d.capped) CHECK(d.mu_ratio <= 0.01);
  }
}

TEST_CASE("cart pole backward pass keeps Vxx symmetric positive definite") {
  Problem p;
  p.dynamics = std::make_shared<CartPoleModel>(0.02);
  p.cost = cart_pole_benchmark_cost();
  p.constraints = std::make_shared<CartPoleLimits>(cart_pole_x_lim(),
                                                   cart_pole_theta_lim());
  p.x0 = cart_pole_benchmark_start();
  p.horizon = 60;
  const Trajectory nominal =
      rollout(*p.dynamics, p.x0, std::vector<Vec>(60, Vec::Zero(1)));
  const SkktBackwardResult bp =
      skkt_backward_pass(*p.dynamics, *p.cost, p.constraints.get(), nominal,
                         SolverOptions{}.reg.initial(), {});
  REQUIRE(bp.ok);
  for (const auto& v : bp.values) {
    CHECK((v.vxx - v.vxx.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::SelfAdjointEigenSolver<Mat> es(v.vxx);
    CHECK(es.eigenvalues().minCoeff() > -1e-9);
  }
}

TEST_CASE("forward pass without rows equals the full unconstrained step") {
  std::mt19937 rng(12);
  auto model = std::make_shared<CarModel>(0.02);
  auto cost = car_cost();
  std::vector<Vec> controls;
  for (int k = 0; k < 15; ++k) controls.push_back(random_vec(rng, 2, 0.5));
  const Trajectory nominal = rollout(*model, Vec::Zero(4), controls);
  const RegState reg = SolverOptions{}.reg.initial();

  const SkktBackwardResult sk =
      skkt_backward_pass(*model, *cost, nullptr, nominal, reg, {});
  const BackwardPassResult ddp = ddp_backward_pass(*model, *cost, nominal, reg);
  REQUIRE(sk.ok);

  const SkktForwardResult sf =
      skkt_forward_pass(*model, *cost, nullptr, nominal, sk, {});
  const ForwardPassResult df =
      ddp_forward_pass(*model, *cost, nominal, ddp.gains, 1.0);
  REQUIRE(sf.ok);
  REQUIRE(df.ok);
  CHECK(std::abs(sf.cost - df.cost) < 1e-8);
  for (int k = 0; k < 15; ++k) {
    CHECK((sf.trajectory.controls[k] - df.trajectory.controls[k])
              .lpNorm<Eigen::Infinity>() < 1e-7);
  }
}

TEST_CASE("terminal trust region halves until the terminal rows pass") {
  // Double integrator, velocity row v <= 0.5. The crafted terminal gradient
  // pushes hard into the constraint; the first box delta = 1 lands at
  // v = 1 > 0.5 and one halving lands exactly on the boundary.
  const LinearModel di = double_integrator(1.0);
  Vec a(2);
  a << 0.0, 1.0;
  auto row = std::make_shared<LinearRowConstraint>(a, Vec(), -0.5,
                                                   ConstraintKind::Velocity);
  const CostModel cost(Mat::Zero(2, 2), 1e-6 * Mat::Identity(1, 1),
                       Mat::Zero(2, 2), Vec::Zero(2));
  const Trajectory nominal =
      rollout(di, Vec::Zero(2), std::vector<Vec>(2, Vec::Zero(1)));

  SkktBackwardResult bp;
  bp.ok = true;
  bp.steps.resize(2);
  for (int k = 0; k < 2; ++k) {
    bp.steps[k].quu = Mat::Identity(1, 1);
    bp.steps[k].qux = Mat::Zero(1, 2);
    bp.steps[k].qu = Vec::Zero(1);
    bp.steps[k].u_nominal = Vec::Zero(1);
  }
  bp.steps[1].qu = -10.0 * Vec::Ones(1);  // wants du = +10 at the last step

  TrustRegionOptions tr;  // eta = 0.5
  const SkktForwardResult fp =
      skkt_forward_pass(di, cost, row.get(), nominal, bp, tr);
  REQUIRE(fp.ok);
  // Geometric halving from the initial box stops in (0.25, 0.5]: the first
  // level that satisfies the terminal row.
  CHECK(fp.trajectory.controls[1][0] > 0.25);
  CHECK(fp.trajectory.controls[1][0] <= 0.5 + 1e-9);
  CHECK(fp.trajectory.states[2][1] <= 0.5 + 1e-9);
}

TEST_CASE("car solve reaches the goal with tight feasibility") {
  auto p = car_problem(car_benchmark_starts()[0]);
  SolverOptions options;
  const SolveResult r = solve_skkt(p, options);
  CHECK(r.report.converged);
  CHECK(r.report.max_violation <= 1e-7);
  CHECK(r.report.dynamics_defect <= 1e-12);
  const Vec goal = car_benchmark_goal();
  const Vec xf = r.trajectory.states.back();
  CHECK(std::abs(xf[0] - goal[0]) < 0.05);
  CHECK(std::abs(xf[1] - goal[1]) < 0.05);
  CHECK(std::abs(xf[2] - goal[2]) < 0.05);
}

TEST_CASE("unconstrained reduction of the full solver") {
  std::mt19937 rng(13);
  Problem p;
  p.dynamics = std::make_shared<CarModel>(0.02);
  p.cost = car_cost();
  p.x0 = Vec::Zero(4);
  p.horizon = 50;
  SolverOptions options;
  options.max_outer_iterations = 25;
  options.cost_change_tol = 1e-4;
  const SolveResult constrained = solve_skkt(p, options);
  const SolveResult plain = solve_unconstrained(p, options);
  CHECK(std::abs(constrained.report.final_cost - plain.report.final_cost) <
        1e-6 * std::max(1.0, std::abs(plain.report.final_cost)));
}

TEST_CASE("active-set baseline gains") {
  std::mt19937 rng(14);

  SUBCASE("no near-active rows gives unconstrained gains") {
    auto model = std::make_shared<CarModel>(0.02);
    auto cost = car_cost();
    // Start far from every obstacle: residuals are strongly negative.
    const Trajectory nominal = rollout(
        *model, car_benchmark_starts()[2], std::vector<Vec>(10, Vec::Zero(2)));
    auto obs = std::make_shared<ObstacleConstraints>(
        car_benchmark_obstacles(0.5), 4, 2);
    const RegState reg = SolverOptions{}.reg.initial();
    const SkktBackwardResult as =
        active_set_backward(*model, *cost, obs.get(), nominal, reg);
    const BackwardPassResult ddp =
        ddp_backward_pass(*model, *cost, nominal, reg);
    REQUIRE(as.ok);
    for (int k = 0; k < 10; ++k) {
      CHECK((as.steps[k].k - ddp.gains[k].k).lpNorm<Eigen::Infinity>() <
            1e-10);
    }
  }

  SUBCASE("near-active row is pinned: C k + g = 0") {
    // Velocity row with residual just inside the near-active band.
    const LinearModel di = double_integrator(0.1);
    Vec a(2);
    a << 0.0, 1.0;
    auto row = std::make_shared<LinearRowConstraint>(
        a, Vec(), -1e-4, ConstraintKind::Velocity);
    const CostModel cost(Mat::Identity(2, 2), 1e-2 * Mat::Identity(1, 1),
                         Mat::Identity(2, 2), Vec::Zero(2));
    Vec x0(2);
    x0 << 1.0, 0.0;  // v = 0, row residual = -1e-4: near-active
    const Trajectory nominal =
        rollout(di, x0, std::vector<Vec>(6, Vec::Zero(1)));
    const SkktBackwardResult as = active_set_backward(
        di, cost, row.get(), nominal, SolverOptions{}.reg.initial());
    REQUIRE(as.ok);
    const ConstraintLinearization lin =
        propagate_constraints(*row, di, nominal, 0);
    CHECK((lin.C * as.steps[0].k + lin.g).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("quadrotor benchmark run stays feasible to the goal") {
  Problem p;
  auto quad = std::make_shared<QuadrotorModel>(0.01);
  p.dynamics = quad;
  p.cost = quadrotor_benchmark_cost();
  p.constraints = std::make_shared<ObstacleConstraints>(
      quadrotor_benchmark_obstacles(), 12, 4);
  p.x0 = quadrotor_benchmark_starts()[0];
  p.horizon = 150;
  const Trajectory init = rollout(
      *quad, p.x0, std::vector<Vec>(p.horizon, quad->hover_control()));
  const SolveResult r = solve_skkt(p, SolverOptions{}, init);
  CHECK(r.report.max_violation <= 1e-7);
  CHECK(r.report.dynamics_defect <= 1e-12);
  const Vec xf = r.trajectory.states.back();
  const Vec goal = quadrotor_benchmark_goal();
  CHECK((xf.head<3>() - goal.head<3>()).norm() < 0.2);
}

TEST_CASE("warm start with inflated violation recovers feasibility") {
  // Solve with obstacles shrunk by 0.2, then reuse that trajectory on the
  // true radii. The generation run gets extra headroom; the recovery run
  // uses the stock iteration cap.
  auto shrunk = car_problem(car_benchmark_starts()[0], 0.3);
  SolverOptions generation;
  generation.max_outer_iterations = 30;
  const SolveResult warm = solve_skkt(shrunk, generation);
  REQUIRE(warm.report.max_violation <= 1e-7);

  auto truth = car_problem(car_benchmark_starts()[0], 0.5);
  const double initial_violation =
      max_violation(*truth.constraints, warm.trajectory);
  CHECK(initial_violation > 1e-4);  // genuinely infeasible start

  const SolveResult fixed = solve_skkt(truth, SolverOptions{}, warm.trajectory);
  CHECK(fixed.report.max_violation <= 1e-7);
}
