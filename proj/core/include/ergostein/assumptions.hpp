// Copyright 2026 The ergostein Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ergostein/linalg.hpp"
#include "ergostein/problem.hpp"

namespace ergostein {

/// How checker sample points are drawn.
///
/// Points come half from Uniform[-box_radius, box_radius]^d and half from a
/// radial heavy tail: uniform direction, radius min(tail_scale |Cauchy|, tail_cap).
/// For pair conditions the partner y is, with equal probability, an independent
/// draw from the same mixture or x plus a uniform perturbation of length < 1.
struct SampleSpec {
    int n_samples = 10000;
    double box_radius = 10.0;
    double tail_scale = 10.0;
    double tail_cap = 1e3;
    std::uint64_t seed = 0;
};

enum class Condition { Monotonicity, Coercivity, GrowthBounds };

std::string_view to_string(Condition c);

/// Outcome of a sampled check. Checkers are samplers, not provers: a
/// non-negative worst margin means "no violation found" on n_samples points.
struct AssumptionReport {
    Condition checked_condition = Condition::Monotonicity;
    int n_samples = 0;
    double worst_margin = 0.0;     ///< min slack; negative means violated
    std::vector<Vec> witness;      ///< point(s) attaining the worst margin
    /// Per-part worst margins, e.g. {"drift k=1", 2.0}.
    std::vector<std::pair<std::string, double>> parts;

    bool violated() const { return worst_margin < 0.0; }
    std::string label() const { return violated() ? "violation found" : "no violation found"; }
};

/// Draws the i-th checker point (deterministic in spec.seed and i).
Vec sample_point(const SampleSpec& spec, int dim, std::uint64_t i);
/// Draws the partner of the i-th point for pair conditions.
Vec sample_partner(const SampleSpec& spec, const Vec& x, std::uint64_t i);

/// slack = -L1|x-y|^2 - [<x-y, b(x)-b(y)> + (2p*-1)/2 ||sigma(x)-sigma(y)||_HS^2]
AssumptionReport check_monotonicity(const SdeProblem& problem, const SampleSpec& sampler);

/// slack = L2 - L3|x|^(gamma+1) - [<x, b(x)> + p*(2p*-1)/2 ||sigma(x)||_HS^2]
AssumptionReport check_coercivity(const SdeProblem& problem, const SampleSpec& sampler);

/// Derivative growth bounds of orders 1..4 for b and each column sigma_j along
/// random unit directions.
AssumptionReport check_growth_bounds(const SdeProblem& problem, const SampleSpec& sampler);

}  // namespace ergostein
