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

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "ergostein/converge.hpp"
#include "ergostein/error.hpp"
#include "ergostein/oracle1d.hpp"

using namespace ergostein;

namespace {

std::vector<ConvergenceRow> synthetic(double c, double order) {
    std::vector<ConvergenceRow> rows;
    for (double tau : {0.04, 0.02, 0.01, 0.005}) {
        ConvergenceRow r;
        r.tau = tau;
        r.abs_error = c * std::pow(tau, order);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TEST_CASE("order fit") {
    const auto fit = fit_order(synthetic(3.0, 2.0));
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(fit.n_used == 4);
    CHECK(fit.ci_lo <= fit.slope);
    CHECK(fit.ci_hi >= fit.slope);

    auto noisy = synthetic(1.0, 1.0);
    for (auto& r : noisy) r.std_error = r.abs_error / 10.0;
    noisy[1].abs_error *= 1.1;
    const auto nf = fit_order(noisy);
    CHECK(nf.slope == doctest::Approx(1.0).epsilon(0.1));
    CHECK(nf.ci_lo < nf.ci_hi);

    // Rows without signal are dropped; two left is too few.
    noisy[0].std_error = noisy[0].abs_error;
    noisy[1].std_error = noisy[1].abs_error;
    CHECK_THROWS_AS(fit_order(noisy), InvalidArgument);
    CHECK_THROWS_AS(fit_order({}), InvalidArgument);
}

TEST_CASE("exact OU/EM errors give order one") {
    const auto rep = exact_error_report({0.04, 0.02, 0.01, 0.005, 0.0025},
                                        [](double t) { return t / (2.0 - t); }, "ou-em");
    CHECK(rep.status == "ok");
    CHECK(rep.slope >= 0.95);
    CHECK(rep.slope <= 1.05);
    REQUIRE(rep.rows.size() == 5);
    CHECK(rep.rows[2].abs_error == doctest::Approx(0.01 / 1.99));
    std::ostringstream csv;
    write_rows_csv(csv, rep);
    const std::string s = csv.str();
    CHECK(s.rfind("tau,error,stderr,estimate,n_steps\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 6);
    std::ostringstream gp;
    write_gnuplot(gp, rep, "rows.csv");
    CHECK(gp.str().find("set logscale xy") != std::string::npos);
    CHECK(gp.str().find("'rows.csv'") != std::string::npos);
}

TEST_CASE("study validation") {
    const auto p = gallery_problem("P1");
    const auto phi = squared_norm_function();
    StudySettings s;
    s.estimator = ErgodicEstimator::Plain;
    s.tau_grid = {0.1, 0.05};
    CHECK_THROWS_AS(ergodic_error_study(p, SchemeKind::EM, phi, 1.0, nullptr, s), InvalidArgument);
    s.tau_grid = {0.1, 0.05, 0.05};
    CHECK_THROWS_AS(ergodic_error_study(p, SchemeKind::EM, phi, 1.0, nullptr, s), InvalidArgument);
    s.tau_grid = {0.1, 0.05, 0.025};
    s.estimator = ErgodicEstimator::SteinControl;
    CHECK_THROWS_AS(ergodic_error_study(p, SchemeKind::EM, phi, 1.0, nullptr, s), InvalidArgument);
    CHECK(parse_estimator("plain") == ErgodicEstimator::Plain);
    CHECK(to_string(parse_estimator("stein-control")) == "stein-control");
    CHECK_THROWS_AS(parse_estimator("exact"), InvalidArgument);
}

TEST_CASE("plain estimator on OU/EM") {
    StudySettings s;
    s.estimator = ErgodicEstimator::Plain;
    s.tau_grid = {0.2, 0.1, 0.05};
    s.pilot_steps = 200000;
    s.min_steps = 1000000;
    s.max_steps = 1000000;
    s.seed = 2;
    s.workers = 1;
    const auto rep = ergodic_error_study(gallery_problem("P1"), SchemeKind::EM, squared_norm_function(), 1.0,
                                         nullptr, s);
    CHECK(rep.status == "ok");
    CHECK(rep.slope > 0.8);
    CHECK(rep.slope < 1.3);
    for (const auto& r : rep.rows) {
        CHECK(r.n_steps == 1000000);
        CHECK(std::abs(r.abs_error - r.tau / (2.0 - r.tau)) <= 4.0 * r.std_error);
    }
}

TEST_CASE("control estimator on P2 is reproducible") {
    const auto p = gallery_problem("P2");
    const auto phi = saturated_square_function();
    const auto d = stationary_density(p);
    const auto sol = stein_solution(p, d, phi);
    StudySettings s;
    s.tau_grid = {0.04, 0.02, 0.01};
    s.pilot_steps = 100000;
    s.min_steps = 100000;
    s.max_steps = 200000;
    s.seed = 5;
    s.workers = 1;
    const auto a = ergodic_error_study(p, SchemeKind::TEM, phi, sol.pi_phi, &sol, s);
    CHECK(a.status == "ok");
    CHECK(a.slope > 0.7);
    CHECK(a.slope < 1.3);
    CHECK(a.estimator == "stein-control");
    s.workers = 3;
    const auto b = ergodic_error_study(p, SchemeKind::TEM, phi, sol.pi_phi, &sol, s);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].estimate == b.rows[i].estimate);
        CHECK(a.rows[i].std_error == b.rows[i].std_error);
    }
    CHECK(a.slope == b.slope);
}
