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

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace skddp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// State/control sequences over a horizon of N steps: N+1 states, N controls.
/// rollout_consistent marks trajectories produced by propagating the
/// dynamics, where the defect is zero by construction; the bench harness
/// still recomputes it rather than trusting the flag.
struct Trajectory {
  std::vector<Vec> states;
  std::vector<Vec> controls;
  double dt{0.0};
  bool rollout_consistent{false};

  int horizon() const { return static_cast<int>(controls.size()); }
};

/// Quadratic expansion of the cost-to-go at one timestep.
struct ValueExpansion {
  double v{0.0};
  Vec vx;
  Mat vxx;
};

/// First/second derivatives of the per-step Q function.
struct QExpansion {
  Vec qx;
  Vec qu;
  Mat qxx;
  Mat qux;
  Mat quu;

  Mat qxu() const { return qux.transpose(); }
};

/// Affine control update law: du = k + K dx.
struct Gains {
  Vec k;
  Mat K;
};
using GainSchedule = std::vector<Gains>;

/// State/control regularizers and their scheduling constants.
struct RegState {
  double nu1{1e-6};
  double nu2{1e-6};
  double scale_up{10.0};
  double scale_down{0.1};
  double nu_min{1e-6};
  double nu_max{1e10};
};

enum class ExitStatus {
  Converged,
  MaxIterations,
  TimeBudget,
  BackwardPassFailure,
  ForwardPassFailure,
  Diverged,
};

std::string to_string(ExitStatus s);

/// Per-timestep record of one interior-point inner loop.
struct StepDiag {
  int timestep{0};
  int constraint_rows{0};
  int inner_iterations{0};
  double mu_ratio{0.0};
  double min_slack{0.0};
  double min_lambda{0.0};
  bool capped{false};
};

/// Per-outer-iteration solver record.
struct IterationDiag {
  int iteration{0};
  std::string phase;
  double cost{0.0};
  double max_violation{0.0};
  double nu1{0.0};
  double nu2{0.0};
  bool accepted{false};
  std::vector<StepDiag> steps;
};

struct Diagnostics {
  std::vector<IterationDiag> iterations;
  std::vector<std::string> events;
};

struct SolverReport {
  double final_cost{std::numeric_limits<double>::quiet_NaN()};
  double max_violation{0.0};
  double dynamics_defect{0.0};
  int outer_iterations{0};
  long inner_iterations_total{0};
  double wall_seconds{0.0};
  ExitStatus status{ExitStatus::MaxIterations};
  bool converged{false};
  Diagnostics diagnostics;
};

/// Thrown when a rollout produces a non-finite state.
class RolloutDivergence : public std::runtime_error {
 public:
  RolloutDivergence(int timestep_, const std::string& what)
      : std::runtime_error(what), timestep(timestep_) {}
  int timestep;
};

class DimensionError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool is_finite(const Vec& v) { return v.allFinite(); }
inline bool is_finite(const Mat& m) { return m.allFinite(); }

}  // namespace skddp
