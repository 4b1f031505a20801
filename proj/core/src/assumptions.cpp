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

#include "ergostein/assumptions.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ergostein/error.hpp"
#include "ergostein/noise.hpp"

namespace ergostein {

namespace {

constexpr std::uint64_t kCheckerPurpose = 0xC0FFEE01ull;

NoiseStream checker_stream(const SampleSpec& spec, std::uint64_t i) {
    return {derive_seed(spec.seed, kCheckerPurpose), i};
}

Vec unit_direction(const NoiseStream& s, std::uint32_t substep, int dim) {
    Vec z(dim);
    for (;;) {
        for (int j = 0; j < dim; ++j) z(j) = standard_normal(s, 0, substep, static_cast<std::uint32_t>(j));
        const double n = z.norm();
        if (n > 0.0) return z / n;
        ++substep;
    }
}

std::string format_point(const Vec& x) {
    std::ostringstream os;
    os.precision(17);
    os << "(";
    for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x(i);
    os << ")";
    return os.str();
}

void require_finite(const Vec& v, const Vec& at, const char* what) {
    if (!v.allFinite()) {
        throw NonFiniteValue(std::string("non-finite ") + what + " at x = " + format_point(at));
    }
}

void require_finite(const Mat& m, const Vec& at, const char* what) {
    if (!m.allFinite()) {
        throw NonFiniteValue(std::string("non-finite ") + what + " at x = " + format_point(at));
    }
}

void check_sampler(const SampleSpec& s) {
    if (s.n_samples < 1) throw InvalidArgument("SampleSpec: n_samples must be >= 1");
    if (!(s.box_radius > 0.0) || !(s.tail_scale > 0.0) || !(s.tail_cap > 0.0)) {
        throw InvalidArgument("SampleSpec: radii must be positive");
    }
}

}  // namespace

std::string_view to_string(Condition c) {
    switch (c) {
        case Condition::Monotonicity:
            return "monotonicity";
        case Condition::Coercivity:
            return "coercivity";
        case Condition::GrowthBounds:
            return "growth-bounds";
    }
    return "unknown";
}

Vec sample_point(const SampleSpec& spec, int dim, std::uint64_t i) {
    const auto s = checker_stream(spec, i);
    Vec x(dim);
    if (uniform01(s, 0, 0, 0) < 0.5) {
        for (int j = 0; j < dim; ++j) {
            x(j) = spec.box_radius * (2.0 * uniform01(s, 0, 2, static_cast<std::uint32_t>(j)) - 1.0);
        }
    } else {
        const double cauchy = std::tan(std::numbers::pi * (uniform01(s, 0, 0, 1) - 0.5));
        const double r = std::min(spec.tail_scale * std::abs(cauchy), spec.tail_cap);
        x = r * unit_direction(s, 1, dim);
    }
    return x;
}

Vec sample_partner(const SampleSpec& spec, const Vec& x, std::uint64_t i) {
    const auto s = checker_stream(spec, i);
    if (uniform01(s, 1, 0, 0) < 0.5) {
        SampleSpec shifted = spec;
        shifted.seed = derive_seed(spec.seed, kCheckerPurpose + 1);
        return sample_point(shifted, static_cast<int>(x.size()), i);
    }
    const double len = uniform01(s, 1, 0, 1);
    return x + len * unit_direction(s, 3, static_cast<int>(x.size()));
}

AssumptionReport check_monotonicity(const SdeProblem& problem, const SampleSpec& sampler) {
    problem.params.validate();
    check_sampler(sampler);
    const auto& prm = problem.params;
    const double c = (2.0 * prm.p_star - 1.0) / 2.0;
    AssumptionReport rep;
    rep.checked_condition = Condition::Monotonicity;
    rep.n_samples = sampler.n_samples;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < sampler.n_samples; ++i) {
        const Vec x = sample_point(sampler, problem.dim_state, static_cast<std::uint64_t>(i));
        const Vec y = sample_partner(sampler, x, static_cast<std::uint64_t>(i));
        const Vec bx = problem.drift(x), by = problem.drift(y);
        require_finite(bx, x, "drift");
        require_finite(by, y, "drift");
        const Mat sx = problem.diffusion(x), sy = problem.diffusion(y);
        require_finite(sx, x, "diffusion");
        require_finite(sy, y, "diffusion");
        const Vec dx = x - y;
        const double slack = -prm.L1 * dx.squaredNorm() -
                             (dx.dot(bx - by) + c * (sx - sy).squaredNorm());
        if (slack < rep.worst_margin) {
            rep.worst_margin = slack;
            rep.witness = {x, y};
        }
    }
    return rep;
}

AssumptionReport check_coercivity(const SdeProblem& problem, const SampleSpec& sampler) {
    problem.params.validate();
    check_sampler(sampler);
    const auto& prm = problem.params;
    const double c = prm.p_star * (2.0 * prm.p_star - 1.0) / 2.0;
    AssumptionReport rep;
    rep.checked_condition = Condition::Coercivity;
    rep.n_samples = sampler.n_samples;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < sampler.n_samples; ++i) {
        const Vec x = sample_point(sampler, problem.dim_state, static_cast<std::uint64_t>(i));
        const Vec bx = problem.drift(x);
        require_finite(bx, x, "drift");
        const Mat sx = problem.diffusion(x);
        require_finite(sx, x, "diffusion");
        const double slack = prm.L2 - prm.L3 * std::pow(x.norm(), prm.gamma + 1.0) -
                             (x.dot(bx) + c * sx.squaredNorm());
        if (slack < rep.worst_margin) {
            rep.worst_margin = slack;
            rep.witness = {x};
        }
    }
    return rep;
}

AssumptionReport check_growth_bounds(const SdeProblem& problem, const SampleSpec& sampler) {
    problem.params.validate();
    check_sampler(sampler);
    for (int k = 1; k <= 4; ++k) {
        if (!problem.drift_deriv[k - 1] || !problem.diffusion_deriv[k - 1]) {
            throw InvalidArgument("check_growth_bounds: missing derivative evaluator for k = " +
                                  std::to_string(k));
        }
    }
    const auto& prm = problem.params;
    const double C = prm.growth_const;
    const double g = prm.gamma;
    AssumptionReport rep;
    rep.checked_condition = Condition::GrowthBounds;
    rep.n_samples = sampler.n_samples;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    std::array<double, 4> worst_b, worst_s;
    worst_b.fill(std::numeric_limits<double>::infinity());
    worst_s.fill(std::numeric_limits<double>::infinity());

    for (int i = 0; i < sampler.n_samples; ++i) {
        const Vec x = sample_point(sampler, problem.dim_state, static_cast<std::uint64_t>(i));
        const auto s = checker_stream(sampler, static_cast<std::uint64_t>(i));
        const double r = x.norm();
        std::array<Vec, 4> dirs;
        for (int j = 0; j < 4; ++j) {
            dirs[static_cast<std::size_t>(j)] =
                unit_direction(s, static_cast<std::uint32_t>(16 + 8 * j), problem.dim_state);
        }
        for (int k = 1; k <= 4; ++k) {
            const std::span<const Vec> v(dirs.data(), static_cast<std::size_t>(k));
            const Vec db = problem.drift_deriv[k - 1](x, v);
            require_finite(db, x, "drift derivative");
            const double bound_b = C * (g <= k ? 1.0 : 1.0 + std::pow(r, g - k));
            const double mb = bound_b - db.norm();

            const Mat ds = problem.diffusion_deriv[k - 1](x, v);
            require_finite(ds, x, "diffusion derivative");
            const double e = g - (2.0 * k - 1.0);
            const double bound_s = C * (g <= 2.0 * k - 1.0 ? 1.0 : 1.0 + std::pow(r, e));
            double ms = std::numeric_limits<double>::infinity();
            for (int j = 0; j < ds.cols(); ++j) ms = std::min(ms, bound_s - ds.col(j).squaredNorm());

            auto& wb = worst_b[static_cast<std::size_t>(k - 1)];
            auto& ws = worst_s[static_cast<std::size_t>(k - 1)];
            wb = std::min(wb, mb);
            ws = std::min(ws, ms);
            const double m = std::min(mb, ms);
            if (m < rep.worst_margin) {
                rep.worst_margin = m;
                rep.witness = {x};
            }
        }
    }
    for (int k = 1; k <= 4; ++k) {
        rep.parts.emplace_back("drift k=" + std::to_string(k), worst_b[static_cast<std::size_t>(k - 1)]);
        rep.parts.emplace_back("diffusion k=" + std::to_string(k), worst_s[static_cast<std::size_t>(k - 1)]);
    }
    return rep;
}

}  // namespace ergostein
