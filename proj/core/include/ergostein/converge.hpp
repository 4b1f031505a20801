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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ergostein/oracle1d.hpp"
#include "ergostein/problem.hpp"
#include "ergostein/schemes.hpp"

namespace ergostein {

struct ConvergenceRow {
    double tau = 0.0;
    double estimate = 0.0;   ///< estimate of pi_tau(phi)
    double abs_error = 0.0;  ///< |estimate - pi(phi)|
    double std_error = 0.0;
    std::size_t n_steps = 0;
    /// abs_error > 3 std_error (or exact rows with std_error = 0 and a nonzero error).
    bool signal() const;
};

struct OrderFit {
    double slope = 0.0;
    double intercept = 0.0;
    double ci_lo = 0.0;  ///< 95% interval, Student t with n - 2 degrees of freedom
    double ci_hi = 0.0;
    int n_used = 0;
};

/// Weighted least squares of log|error| on log tau over the signal rows, with
/// weights (|error| / stderr)^2, or unit weights when every stderr is 0.
/// Throws InvalidArgument with fewer than 3 signal rows.
OrderFit fit_order(const std::vector<ConvergenceRow>& rows);

enum class ErgodicEstimator {
    Plain,        ///< time average of phi
    SteinControl, ///< time average of phi - (E[f(Y_1) | x] - f(x)) / tau, same pi_tau mean
};

std::string_view to_string(ErgodicEstimator e);
ErgodicEstimator parse_estimator(std::string_view s);

struct StudySettings {
    std::vector<double> tau_grid{0.04, 0.02, 0.01, 0.005, 0.0025};
    ErgodicEstimator estimator = ErgodicEstimator::SteinControl;
    /// Pilot chain length at the largest tau.
    std::size_t pilot_steps = 200000;
    std::size_t min_steps = 100000;
    std::size_t max_steps = 20000000;
    /// Multiplies every per-tau step count after the pilot rule.
    double budget_scale = 1.0;
    int n_chains = 4;
    int gh_nodes = 16;  ///< Gauss-Hermite nodes for the inner expectation
    double x0 = 0.0;
    std::uint64_t seed = 0;
    int workers = 0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;  ///< sorted by tau descending
    double slope = 0.0;
    double intercept = 0.0;  ///< of the fitted line in log-log coordinates
    double slope_ci_lo = 0.0;
    double slope_ci_hi = 0.0;
    int n_signal = 0;
    std::string status;  ///< "ok" or "inconclusive - increase budget"
    std::string scheme;
    std::string problem;
    std::string phi;
    std::string estimator;
    double pi_phi = 0.0;
    std::uint64_t seed = 0;
    double pilot_error = 0.0;
    double pilot_stderr = 0.0;
};

/// Steps per tau follow n(tau) = n_req (tau_max / tau)^k, where n_req makes
/// the pilot's standard error a fifth of its error and k is 3 for the plain
/// estimator and 1 for the control estimator; clamped to [min_steps, max_steps].
/// The control estimator needs `solution` (d = m = 1).
ConvergenceReport ergodic_error_study(const SdeProblem& problem, SchemeKind kind,
                                      const SmoothFunction& phi, double pi_phi,
                                      const SteinSolution1d* solution,
                                      const StudySettings& settings);

/// Rows with exact errors, e.g. from a closed form, fitted with unit weights.
ConvergenceReport exact_error_report(const std::vector<double>& tau_grid,
                                     const std::function<double(double)>& exact_error, const std::string& label);

/// CSV with header tau,error,stderr,estimate,n_steps.
void write_rows_csv(std::ostream& os, const ConvergenceReport& report);
/// Gnuplot script drawing the rows and the fitted line on log-log axes.
void write_gnuplot(std::ostream& os, const ConvergenceReport& report, const std::string& csv_path);

}  // namespace ergostein
