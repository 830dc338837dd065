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

#include <optional>

#include "skddp/al.hpp"
#include "skddp/skkt.hpp"

namespace skddp {

enum class HybridPhase { Al, Skkt, AlFallback };

std::string to_string(HybridPhase p);

/// Phase choice from the iteration history: start in AL, hand over to S-KKT
/// once the AL tolerances hold, and fall back to AL when S-KKT stalls for
/// `patience` iterations without sufficient improvement in cost or
/// violation.
HybridPhase switch_decision(const std::vector<IterationDiag>& history,
                            const SwitchConfig& cfg);

/// AL warm start with a control-limited backward pass, then S-KKT polishing
/// whose forward QPs carry the control box. The returned controls respect
/// the box exactly.
SolveResult solve_hybrid(const Problem& problem, const Vec& u_lo,
                         const Vec& u_hi, const SolverOptions& options,
                         std::optional<Trajectory> initial = {});

}  // namespace skddp
