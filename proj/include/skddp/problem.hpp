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

#include <memory>
#include <optional>

#include "skddp/constraints.hpp"
#include "skddp/cost.hpp"
#include "skddp/dynamics.hpp"

namespace skddp {

/// One trajectory-optimization instance. Constraints may be null for
/// unconstrained problems.
struct Problem {
  std::shared_ptr<const DynamicsModel> dynamics;
  std::shared_ptr<const StageCost> cost;
  std::shared_ptr<const ConstraintModel> constraints;
  Vec x0;
  int horizon{0};

  int constraint_count() const {
    return constraints ? constraints->count() : 0;
  }
};

struct RegOptions {
  double nu_init{1e-6};
  double nu_min{1e-6};
  double nu_max{1e10};
  double scale_up{10.0};
  double scale_down{0.1};

  RegState initial() const {
    return RegState{nu_init, nu_init, scale_up, scale_down, nu_min, nu_max};
  }
};

struct InteriorPointOptions {
  double epsilon{1e-4};       // slack initialization floor
  double zeta{0.99};          // fraction-to-boundary margin
  double mu_ratio_tol{0.01};  // inner-loop duality exit ratio
  int max_inner{30};
};

struct TrustRegionOptions {
  double init_scale{10.0};  // delta0 = init_scale * max |u_nominal| ...
  double init_floor{1e3};   // ... floored at a relatively large value
  double eta{0.5};          // shrink factor
  double min_delta{1e-8};
  int max_restarts{60};
};

struct AlOptions {
  double lambda_init{1e-2};
  double mu_init{1.0};
  double growth{10.0};
  double improvement_ratio{0.25};
  double mu_max{1e8};
  double lambda_min{1e-8};
  double lambda_max{1e8};
  double inner_cost_tol{1e-2};
  int max_inner{20};
};

struct SwitchConfig {
  double al_violation_tol{1e-2};
  double al_cost_tol{1.0};
  int patience{3};
  double cost_improvement{8e-2};
  double violation_improvement_frac{0.1};
  double tighten_factor{0.1};
};

struct SolverOptions {
  int max_outer_iterations{15};
  double cost_change_tol{8e-2};
  double violation_tol{1e-7};
  int max_backtracks{10};  // line-search alphas 1, 1/2, ..., 2^-max
  double time_budget_s{std::numeric_limits<double>::infinity()};
  bool record_step_diagnostics{true};

  RegOptions reg;
  InteriorPointOptions ip;
  TrustRegionOptions tr;
  AlOptions al;
  SwitchConfig hybrid;
  int hybrid_max_total_iterations{60};
};

struct SolveResult {
  Trajectory trajectory;
  SolverReport report;
};

}  // namespace skddp
