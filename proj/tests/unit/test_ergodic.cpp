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

#include "ergostein/error.hpp"
#include "ergostein/ergodic.hpp"

using namespace ergostein;

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

SchemeSpec spec(SchemeKind k, double tau) {
    SchemeSpec s;
    s.kind = k;
    s.tau = tau;
    return s;
}

SdeProblem frozen() { return radial_problem("frozen", 1, RadialCoefficients{0.0, 0.0, 0.0, 0.0}, AssumptionParams{}); }

SdeProblem contraction() {
    return radial_problem("contraction", 1, RadialCoefficients{1.0, 0.0, 0.0, 0.0}, AssumptionParams{});
}

ScalarField field(const SmoothFunction& f) {
    return [f](const Vec& x) { return f(x); };
}

}  // namespace

TEST_CASE("zero coefficients give a constant trajectory") {
    const auto p = frozen();
    auto traj = simulate_chain(p, spec(SchemeKind::EM, 0.1), v1(1.25), 1000, NoiseStream{1, 0}, 7);
    int n = 0;
    while (traj.next()) {
        CHECK(traj.state()[0] == 1.25);
        ++n;
    }
    CHECK(traj.k() == 1000);
    CHECK(n == 143);
    CHECK_FALSE(traj.diverged());
    CHECK_THROWS_AS(simulate_chain(p, spec(SchemeKind::EM, 0.1), v1(0.0), 0, NoiseStream{}), InvalidArgument);
}

TEST_CASE("time average of a constant is exact") {
    const auto p2 = gallery_problem("P2");
    auto traj = simulate_chain(p2, spec(SchemeKind::TEM, 0.01), v1(0.3), 20000, NoiseStream{3, 0});
    const auto est = time_average([](const Vec&) { return 2.5; }, traj, 4000, 32);
    CHECK(est.phi_mean == 2.5);
    CHECK(est.std_error == 0.0);
    CHECK(est.burn_in == 4000);
    CHECK(est.n_samples == 16000);
    auto short_traj = simulate_chain(p2, spec(SchemeKind::TEM, 0.01), v1(0.3), 100, NoiseStream{3, 0});
    CHECK_THROWS_AS(time_average([](const Vec&) { return 1.0; }, short_traj, 200, 32), InvalidArgument);
    auto t2 = simulate_chain(p2, spec(SchemeKind::TEM, 0.01), v1(0.3), 1000, NoiseStream{3, 0});
    CHECK_THROWS_AS(time_average([](const Vec&) { return 1.0; }, t2, 0, 4), InvalidArgument);
}

TEST_CASE("OU via EM reproduces the AR(1) stationary variance") {
    const double tau = 0.01;
    ChainAverageSpec cs;
    cs.n_steps = 1000000;
    const auto est = chain_average(gallery_problem("P1"), spec(SchemeKind::EM, tau), field(squared_norm_function()),
                                   v1(0.0), cs, 12, 1);
    const double exact = 2.0 * tau / (1.0 - (1.0 - tau) * (1.0 - tau));
    CHECK(exact == doctest::Approx(1.0050251256));
    CHECK(std::abs(est.phi_mean - exact) <= 3.0 * est.std_error);
    CHECK(est.std_error > 0.0);
    CHECK(est.burn_in == 200000);
    CHECK(est.n_batches == 32);
}

TEST_CASE("odd test function on the symmetric problem averages to zero") {
    ChainAverageSpec cs;
    cs.n_steps = 400000;
    cs.n_chains = 2;
    const auto est = chain_average(gallery_problem("P2"), spec(SchemeKind::TEM, 0.01),
                                   field(coordinate_function()), v1(0.0), cs, 5, 1);
    CHECK(std::abs(est.phi_mean) <= 3.0 * est.std_error);
    CHECK(est.n_chains == 2);
}

TEST_CASE("batch-means standard error scales like 1/sqrt(length)") {
    const auto ou = gallery_problem("P1");
    const auto phi = field(squared_norm_function());
    double se_short = 0.0, se_long = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ChainAverageSpec cs;
        cs.n_steps = 200000;
        se_short += chain_average(ou, spec(SchemeKind::EM, 0.01), phi, v1(0.0), cs, seed, 1).std_error;
        cs.n_steps = 400000;
        se_long += chain_average(ou, spec(SchemeKind::EM, 0.01), phi, v1(0.0), cs, 100 + seed, 1).std_error;
    }
    const double ratio = se_short / se_long;
    CHECK(ratio >= 1.2);
    CHECK(ratio <= 1.7);
}

TEST_CASE("divergence is flagged, not averaged") {
    const auto p3 = gallery_problem("P3");
    auto traj = simulate_chain(p3, spec(SchemeKind::EM, 0.1), v1(10.0), 1000, NoiseStream{0, 0});
    const auto est = time_average([](const Vec& x) { return x[0]; }, traj, 0, 8);
    CHECK(est.diverged);
    CHECK(std::isnan(est.phi_mean));
    REQUIRE(est.divergence_step.has_value());
    CHECK(*est.divergence_step <= 10);
}

TEST_CASE("implicit solver failures carry the step index") {
    SchemeSpec s = spec(SchemeKind::BEM, 0.9);
    s.bem.max_iterations = 1;
    auto traj = simulate_chain(gallery_problem("P2"), s, v1(80.0), 10, NoiseStream{0, 0});
    try {
        traj.next();
        FAIL("expected SolverFailure");
    } catch (const SolverFailure& e) {
        CHECK(e.step() == 1);
    }
}

TEST_CASE("ensemble expectations") {
    const auto ou = gallery_problem("P1");
    const auto phi = field(coordinate_function());
    const auto at0 = ensemble_expectation(ou, spec(SchemeKind::EM, 0.01), phi, v1(0.7), 0.0, 10, 1, 1);
    CHECK(at0.mean == 0.7);
    CHECK(at0.std_error == 0.0);
    const auto e1 = ensemble_expectation(ou, spec(SchemeKind::EM, 1e-4), phi, v1(1.0), 1.0, 2000, 7, 1);
    CHECK(std::abs(e1.mean - std::exp(-1.0)) <= 3.0 * e1.std_error);
    CHECK(e1.n_diverged == 0);
    CHECK_THROWS_AS(ensemble_expectation(ou, spec(SchemeKind::EM, 0.01), phi, v1(0.0), -1.0, 10, 1, 1),
                    InvalidArgument);
    const auto p3 = ensemble_expectation(gallery_problem("P3"), spec(SchemeKind::EM, 0.1), phi, v1(10.0), 10.0,
                                         20, 1, 1);
    CHECK(p3.n_diverged == 20);
    CHECK(p3.divergence_fraction == 1.0);
}

TEST_CASE("moment traces") {
    SUBCASE("deterministic contraction") {
        const auto tr = moment_trace(contraction(), spec(SchemeKind::EM, 0.1), v1(3.0), 1.0, 4, 1000, 0, 1);
        CHECK(tr.running_sup == 9.0);
        CHECK(tr.checkpoints.front().first == 0);
        CHECK(tr.checkpoints.back().first == 1000);
        for (std::size_t i = 1; i < tr.checkpoints.size(); ++i) {
            CHECK(tr.checkpoints[i].second < tr.checkpoints[i - 1].second);
            if (i > 1 && i + 1 < tr.checkpoints.size()) {
                CHECK(tr.checkpoints[i].first == 2 * tr.checkpoints[i - 1].first);
            }
        }
        CHECK(tr.sup_before_final());
    }
    SUBCASE("modified schemes on P2 plateau with p = 4") {
        for (SchemeKind k : {SchemeKind::TEM, SchemeKind::PEM, SchemeKind::BEM}) {
            const auto tr = moment_trace(gallery_problem("P2"), spec(k, 0.01), v1(1.5), 4.0, 100, 100000, 3, 1);
            CAPTURE(to_string(k));
            CHECK(std::isfinite(tr.running_sup));
            CHECK(tr.n_diverged == 0);
            CHECK(tr.sup_before_final());
            double mx = 0.0;
            for (const auto& c : tr.checkpoints) mx = std::max(mx, c.second);
            CHECK(tr.running_sup == mx);
        }
    }
    SUBCASE("explicit Euler from a large start on P3 blows up") {
        const auto tr = moment_trace(gallery_problem("P3"), spec(SchemeKind::EM, 0.1), v1(10.0), 1.0, 10, 1000, 0, 1);
        CHECK_FALSE(std::isfinite(tr.running_sup));
        CHECK(tr.n_diverged == 10);
    }
}

TEST_CASE("first-variation decay") {
    DecaySettings ds;
    SUBCASE("OU decays at rate one") {
        const auto fit = first_variation_decay(gallery_problem("P1"), v1(0.5), v1(1.0), 1.0, 2.0, 50, 1, ds, 1);
        CHECK(fit.lambda_hat == doctest::Approx(1.0).epsilon(0.05));
        CHECK(fit.r_squared >= 0.99);
        CHECK_FALSE(fit.skipped);
        CHECK(fit.notice.empty());
        CHECK(fit.series.size() == static_cast<std::size_t>(ds.n_points + 1));
    }
    SUBCASE("zero direction is skipped") {
        const auto fit = first_variation_decay(gallery_problem("P1"), v1(0.5), v1(0.0), 1.0, 2.0, 10, 1, ds, 1);
        CHECK(fit.skipped);
        CHECK_FALSE(fit.notice.empty());
    }
    SUBCASE("P2 decays at least at L1 / 2") {
        const auto p2 = gallery_problem("P2");
        const auto fit = first_variation_decay(p2, v1(1.0), v1(1.0), 1.0, 2.0, 200, 2, ds, 1);
        CHECK(fit.lambda_hat >= p2.params.L1 / 2.0);
        CHECK(fit.r_squared >= 0.9);
    }
    SUBCASE("non-monotone problems carry a warning") {
        const auto fit = first_variation_decay(gallery_problem("P3"), v1(1.0), v1(1.0), 1.0, 0.5, 20, 2, ds, 1);
        CHECK(fit.notice.find("monotonicity") != std::string::npos);
    }
}

TEST_CASE("results do not depend on the worker count") {
    const auto p2 = gallery_problem("P2");
    const auto phi = field(tanh_function());
    ChainAverageSpec cs;
    cs.n_steps = 50000;
    cs.n_chains = 5;
    const auto a = chain_average(p2, spec(SchemeKind::BEM, 0.02), phi, v1(0.0), cs, 9, 1);
    const auto b = chain_average(p2, spec(SchemeKind::BEM, 0.02), phi, v1(0.0), cs, 9, 4);
    CHECK(a.phi_mean == b.phi_mean);
    CHECK(a.std_error == b.std_error);
    const auto e1 = ensemble_expectation(p2, spec(SchemeKind::TEM, 0.01), phi, v1(1.0), 1.0, 333, 4, 1);
    const auto e4 = ensemble_expectation(p2, spec(SchemeKind::TEM, 0.01), phi, v1(1.0), 1.0, 333, 4, 4);
    CHECK(e1.mean == e4.mean);
    CHECK(e1.std_error == e4.std_error);
    const auto m1 = moment_trace(p2, spec(SchemeKind::PEM, 0.01), v1(1.0), 2.0, 37, 2000, 4, 1);
    const auto m4 = moment_trace(p2, spec(SchemeKind::PEM, 0.01), v1(1.0), 2.0, 37, 2000, 4, 3);
    CHECK(m1.checkpoints == m4.checkpoints);
}
