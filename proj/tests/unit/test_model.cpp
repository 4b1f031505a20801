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

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ergostein/assumptions.hpp"
#include "ergostein/error.hpp"
#include "ergostein/problem.hpp"

using namespace ergostein;

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

Vec random_vec(std::mt19937_64& rng, int d, double r) {
    std::uniform_real_distribution<double> u(-r, r);
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = u(rng);
    return v;
}

Vec unit_vec(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> n;
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = n(rng);
    return v / v.norm();
}

// Fourth-order central difference of g along v.
template <class G>
auto central(G&& g, const Vec& x, const Vec& v, double h) {
    return (8.0 * (g(x + h * v) - g(x - h * v)) - (g(x + 2 * h * v) - g(x - 2 * h * v))) / (12.0 * h);
}

double rel_gap(double a, double b, double scale) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), scale}); }

// Largest relative gap between the order-k drift/diffusion forms and finite
// differences of the order-(k-1) forms, over random probes.
double derivative_consistency(const SdeProblem& p, int probes) {
    std::mt19937_64 rng(11);
    double worst = 0.0;
    const int d = p.dim_state;
    for (int i = 0; i < probes; ++i) {
        const Vec x = random_vec(rng, d, 2.5);
        std::vector<Vec> dirs;
        for (int k = 1; k <= 4; ++k) {
            const Vec vk = unit_vec(rng, d);
            auto lower_b = [&](const Vec& z) -> Vec {
                if (k == 1) return p.drift(z);
                return p.drift_deriv[k - 2](z, std::span<const Vec>(dirs.data(), dirs.size()));
            };
            auto lower_s = [&](const Vec& z) -> Mat {
                if (k == 1) return p.diffusion(z);
                return p.diffusion_deriv[k - 2](z, std::span<const Vec>(dirs.data(), dirs.size()));
            };
            const double h = 1e-3;
            const Vec fd_b = central(lower_b, x, vk, h);
            const Mat fd_s = central(lower_s, x, vk, h);
            dirs.push_back(vk);
            const Vec ex_b = p.drift_deriv[k - 1](x, std::span<const Vec>(dirs.data(), dirs.size()));
            const Mat ex_s = p.diffusion_deriv[k - 1](x, std::span<const Vec>(dirs.data(), dirs.size()));
            const double scale = 1.0 + p.drift(x).norm() + p.diffusion(x).norm();
            worst = std::max(worst, (fd_b - ex_b).norm() / std::max(ex_b.norm(), 1e-3 * scale));
            worst = std::max(worst, (fd_s - ex_s).norm() / std::max(ex_s.norm(), 1e-3 * scale));
        }
    }
    return worst;
}

SdeProblem shifted_double_well() {
    AssumptionParams prm;
    prm.gamma = 3.0;
    prm.L1 = 1.0;
    prm.L2 = 8.0;
    prm.L3 = 0.5;
    prm.p_star = 2.0;
    prm.growth_const = 6.0;  // |b''| = 6|x| <= 6 (1 + |x|)
    return poly_problem("shifted", {0.0, -1.0, 0.0, -1.0}, {std::sqrt(2.0)}, prm);
}

}  // namespace

TEST_CASE("gallery problems carry their documented shape and status") {
    const auto p1 = gallery_problem("P1");
    const auto p2 = gallery_problem("dissipative-cubic");
    const auto p3 = gallery_problem("double-well");
    CHECK(p1.status == ProblemStatus::Lipschitz);
    CHECK(p2.status == ProblemStatus::Full);
    CHECK(p3.status == ProblemStatus::A1Partial);
    CHECK(to_string(p3.status) == "A1-partial");
    CHECK(p2.params.theorem_study);
    CHECK(p2.params.p_star >= p2.params.required_p_star());
    CHECK(p2.drift(v1(2.0))[0] == doctest::Approx(-10.0));
    CHECK(p2.diffusion(v1(1.0))(0, 0) == doctest::Approx(0.5 * std::sqrt(2.0)));
    CHECK(p3.drift(v1(2.0))[0] == doctest::Approx(-6.0));
    CHECK_THROWS_AS(gallery_problem("P4"), InvalidArgument);
    for (const auto& name : gallery_names()) {
        const auto p = gallery_problem(name);
        CHECK_NOTHROW(p.validate_shape(v1(0.3)));
        CHECK(p.diffusion(v1(0.7)).cols() == p.dim_noise);
        CHECK(p.diffusion(v1(0.7)).rows() == p.dim_state);
    }
}

TEST_CASE("derivative evaluators agree with finite differences") {
    for (const auto& name : gallery_names()) {
        CAPTURE(name);
        CHECK(derivative_consistency(gallery_problem(name), 100) < 1e-5);
    }
    RadialCoefficients coef{1.0, 0.5, 0.7, 1.0};
    CHECK(derivative_consistency(radial_problem("r3", 3, coef, AssumptionParams{}), 100) < 1e-5);
    CHECK(derivative_consistency(poly_problem("poly", {0.5, -1.0, 0.2, -1.0}, {1.0, 0.3}, AssumptionParams{}), 100) <
          1e-5);
}

TEST_CASE("test functions: derivatives consistent and seminorm bound respected") {
    std::mt19937_64 rng(5);
    for (const auto& name : test_function_names()) {
        for (int d : {1, 2}) {
            const auto f = named_test_function(name, d);
            CAPTURE(name);
            CAPTURE(d);
            std::vector<double> sup(4, 0.0);
            for (int i = 0; i < 100; ++i) {
                const Vec x = random_vec(rng, d, 3.0);
                std::vector<Vec> dirs;
                for (int k = 1; k <= 4; ++k) {
                    const Vec vk = unit_vec(rng, d);
                    auto lower = [&](const Vec& z) {
                        return k == 1 ? f(z) : f.derivative(z, std::span<const Vec>(dirs.data(), dirs.size()));
                    };
                    const double fd = central(lower, x, vk, 1e-3);
                    dirs.push_back(vk);
                    const double ex = f.derivative(x, std::span<const Vec>(dirs.data(), dirs.size()));
                    CHECK(rel_gap(fd, ex, 1e-3) < 1e-5);
                    sup[static_cast<std::size_t>(k - 1)] = std::max(sup[static_cast<std::size_t>(k - 1)], std::abs(ex));
                }
            }
            CHECK(sup[0] + sup[1] + sup[2] + sup[3] <= f.seminorm_bound * (1.0 + 1e-12));
        }
    }
    CHECK_THROWS_AS(named_test_function("sin"), InvalidArgument);
    const auto c = named_test_function("const");
    CHECK(c.seminorm_bound == 0.0);
}

TEST_CASE("assumption parameters are gated") {
    AssumptionParams p;
    p.gamma = 1.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p.gamma = 3.0;
    p.p_star = 1.5;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p.p_star = 2.0;
    p.theorem_study = true;  // needs 2 p* >= 13
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p.p_star = 6.5;
    CHECK_NOTHROW(p.validate());
    CHECK(p.required_p_star() == doctest::Approx(6.5));
}

TEST_CASE("monotonicity checker") {
    SampleSpec spec;
    SUBCASE("OU attains equality") {
        auto ou = gallery_problem("P1");
        ou.params.L1 = 1.0;
        ou.params.p_star = 2.0;
        const auto r = check_monotonicity(ou, spec);
        CHECK(r.n_samples == spec.n_samples);
        CHECK(std::abs(r.worst_margin) < 1e-9);
        CHECK_FALSE(r.violated());
        CHECK(r.label() == "no violation found");
    }
    SUBCASE("double well with L1 = 0.5 fails near the origin") {
        const auto r = check_monotonicity(gallery_problem("P3"), spec);
        CHECK(r.violated());
        REQUIRE(r.witness.size() == 2);
        CHECK(r.witness[0].norm() < 1.5);
        CHECK(r.label() == "violation found");
        // Grid oracle on [-3, 3]^2: the slack minimum is negative.
        double worst = 0.0;
        for (int i = 0; i <= 120; ++i) {
            for (int j = 0; j <= 120; ++j) {
                const double x = -3.0 + 0.05 * i, y = -3.0 + 0.05 * j;
                const double bx = x - x * x * x, by = y - y * y * y;
                worst = std::min(worst, -0.5 * (x - y) * (x - y) - (x - y) * (bx - by));
            }
        }
        CHECK(worst < 0.0);
    }
    SUBCASE("shifted double well holds with L1 = 1") {
        const auto r = check_monotonicity(shifted_double_well(), spec);
        CHECK(r.worst_margin >= -1e-9);
    }
    SUBCASE("planted violation: L1 doubled beyond the true constant") {
        auto ou = gallery_problem("P1");
        ou.params.L1 = 2.0;
        CHECK(check_monotonicity(ou, spec).violated());
    }
    SUBCASE("P2 with its documented constants") {
        CHECK_FALSE(check_monotonicity(gallery_problem("P2"), spec).violated());
    }
}

TEST_CASE("coercivity checker") {
    SampleSpec spec;
    SUBCASE("double well with L2 = 8, L3 = 1/2") {
        const auto r = check_coercivity(gallery_problem("P3"), spec);
        CHECK(r.worst_margin >= 0.0);
        // Dense grid over [-10, 10] as the oracle.
        double worst = 1e300;
        for (int i = 0; i <= 20000; ++i) {
            const double x = -10.0 + 1e-3 * i;
            worst = std::min(worst, 8.0 - 0.5 * std::pow(std::abs(x), 4) - (x * x - std::pow(x, 4) + 6.0));
        }
        CHECK(worst >= 0.0);
    }
    SUBCASE("linear multiplicative noise with cubic drift") {
        AssumptionParams prm;
        prm.gamma = 3.0;
        prm.L2 = 5.0;
        prm.L3 = 0.5;
        prm.p_star = 2.0;
        const auto p = poly_problem("mult", {0.0, 0.0, 0.0, -1.0}, {0.0, 1.0}, prm);
        CHECK(check_coercivity(p, spec).worst_margin >= 0.0);
    }
    SUBCASE("P2 with its documented constants") {
        CHECK_FALSE(check_coercivity(gallery_problem("P2"), spec).violated());
    }
}

TEST_CASE("growth-bound checker") {
    SampleSpec spec;
    const auto p = shifted_double_well();
    const auto r = check_growth_bounds(p, spec);
    CHECK(r.worst_margin >= 0.0);
    bool saw_k4 = false;
    for (const auto& [name, margin] : r.parts) {
        if (name == "drift k=4") {
            saw_k4 = true;
            CHECK(margin == doctest::Approx(p.params.growth_const));
        }
        if (name.rfind("diffusion", 0) == 0) CHECK(margin >= 0.0);
    }
    CHECK(saw_k4);
    // k = 1 holds even with C = 3: (1 + 3x^2) / (1 + x^2) <= 3 on a grid.
    double ratio = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        const double x = -100.0 + 0.1 * i;
        ratio = std::max(ratio, (1.0 + 3.0 * x * x) / (3.0 * (1.0 + x * x)));
    }
    CHECK(ratio <= 1.0);
    for (const auto& name : gallery_names()) {
        CAPTURE(name);
        CHECK_FALSE(check_growth_bounds(gallery_problem(name), spec).violated());
    }
}

TEST_CASE("checkers reject non-finite coefficients and missing evaluators") {
    auto p = gallery_problem("P1");
    p.drift = [](const Vec& x) -> Vec {
        if (x.norm() > 5.0) return Vec::Constant(x.size(), std::nan(""));
        return -x;
    };
    SampleSpec spec;
    try {
        (void)check_monotonicity(p, spec);
        FAIL("expected NonFiniteValue");
    } catch (const NonFiniteValue& e) {
        CHECK(std::string(e.what()).find("x = ") != std::string::npos);
    }
    auto q = gallery_problem("P2");
    q.drift_deriv[3] = nullptr;
    try {
        (void)check_growth_bounds(q, spec);
        FAIL("expected InvalidArgument");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("k = 4") != std::string::npos);
    }
}

TEST_CASE("checker sampling is deterministic and mixes box and tail") {
    SampleSpec spec;
    spec.seed = 9;
    int far = 0;
    for (std::uint64_t i = 0; i < 2000; ++i) {
        const Vec a = sample_point(spec, 2, i);
        CHECK(a == sample_point(spec, 2, i));
        CHECK(a.norm() <= spec.tail_cap * (1 + 1e-12));
        if (a.cwiseAbs().maxCoeff() > spec.box_radius) ++far;
    }
    CHECK(far > 100);
}
