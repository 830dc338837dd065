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

#include "skddp/types.hpp"

namespace skddp {

/// min 1/2 z'Hz + q'z  s.t.  A z <= b,  lo <= z <= hi (box optional,
/// empty vectors = absent). H must be symmetric positive definite.
struct QpProblem {
  Mat H;
  Vec q;
  Mat A;
  Vec b;
  Vec lo;
  Vec hi;
};

enum class QpStatus { Optimal, Infeasible, MaxIter };

/// Active rows index the stacked system: rows 0..p-1 are A rows, p+j lower
/// bounds, p+m+j upper bounds.
struct QpSolution {
  Vec z;
  std::vector<int> active;
  QpStatus status{QpStatus::MaxIter};
  double max_violation{0.0};  // phase-1 residual when infeasible
  int iterations{0};
};

/// Primal active-set solve. Infeasible problems are detected by a phase-1
/// minimizing the constraint violation; hitting the iteration cap is
/// reported as MaxIter, never as Optimal.
QpSolution solve_qp(const QpProblem& p);

struct BoxQpSolution {
  Vec z;
  std::vector<int> lower_active;
  std::vector<int> upper_active;
  QpStatus status{QpStatus::MaxIter};
  int iterations{0};
};

/// min 1/2 z'Hz + q'z  s.t.  lo <= z <= hi, by an active-set iteration on
/// the bounds. Throws std::invalid_argument on an empty box.
BoxQpSolution solve_box_qp(const Mat& H, const Vec& q, const Vec& lo,
                           const Vec& hi);

}  // namespace skddp
