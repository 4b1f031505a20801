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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "ergostein/problem.hpp"
#include "ergostein/schemes.hpp"

namespace ergostein {

/// Tabulated stationary density of a scalar diffusion,
/// p(x) = sigma(x)^-2 exp(int_0^x 2b/sigma^2) / Z, on a uniform grid of [-R, R].
struct StationaryDensity1d {
    std::vector<double> grid;
    std::vector<double> log_density;  ///< log p (normalized)
    std::vector<double> dlog;         ///< (log p)'
    std::vector<double> d2log;        ///< (log p)''
    double log_normalizer = 0.0;      ///< log Z of the unnormalized density
    double tail_mass_bound = 0.0;     ///< bound on the mass outside [-R, R]
    double R = 0.0;
    double h = 0.0;

    double pdf(std::size_t i) const;
    std::size_t size() const { return grid.size(); }
    /// Total mass on the grid by the two-point Hermite rule.
    double mass() const;
    /// Index of the largest grid value of p.
    std::size_t mode_index() const;
};

/// Throws InvalidArgument unless d = m = 1, R > 0 and n_grid is odd and >= 33;
/// Error on degenerate noise or when the tail bound is not below 1e-12.
/// The tail bound assumes (log p)' is negative and non-increasing beyond +-R,
/// which is checked on [R, 4R] and [-4R, -R].
StationaryDensity1d stationary_density(const SdeProblem& problem, double R, int n_grid = 8001);

/// Smallest R in {8, 12, 16, 24} whose tail bound is below 1e-12.
StationaryDensity1d stationary_density(const SdeProblem& problem, int n_grid = 8001);

struct PiEstimate {
    double value = 0.0;
    double error_estimate = 0.0;  ///< |full grid - every other node| + tail term
};

/// pi(phi) by the two-point Hermite rule on the density grid. Throws Error if
/// the error estimate is not below 1e-9 (e.g. phi grows too fast for the tails).
PiEstimate pi_estimate(const StationaryDensity1d& density, const SmoothFunction& phi);
double pi_of(const StationaryDensity1d& density, const SmoothFunction& phi);

struct SteinSolution1d;

/// Solution of b f' + (sigma^2/2) f'' = phi - pi(phi) on the density grid, gauge f(0) = 0.
///
/// f' = (2/(sigma^2 p)) int_{-inf}^x (phi - pi) p on the left of the mode and
/// -(2/(sigma^2 p)) int_x^{inf} (phi - pi) p on the right; both are accumulated
/// in log-scaled form. f'' follows from the equation, f''' and f'''' from its
/// derivatives, and f from the Hermite rule applied to f'.
struct SteinSolution1d {
    std::vector<double> grid;
    std::vector<double> f, f1, f2, f3, f4;
    double pi_phi = 0.0;
    double residual_sup = 0.0;    ///< finite-difference residual, interior nodes
    double gauge_constant = 0.0;  ///< pi(f)
    double R = 0.0;
    double h = 0.0;

    /// Derivative of order 0..4 at x in [-R, R]; DomainEscape outside.
    double eval(double x, int order = 0) const;
    /// The table as a SmoothFunction with domain [-R, R].
    SmoothFunction as_function(const std::string& name = "stein") const;

    struct Context;
    std::shared_ptr<const Context> ctx;
};

struct SteinSettings {
    double residual_tolerance = 1e-8;
};

/// Throws Error when residual_sup >= settings.residual_tolerance.
SteinSolution1d stein_solution(const SdeProblem& problem, const StationaryDensity1d& density,
                               const SmoothFunction& phi, const SteinSettings& settings = {});

/// sup over nodes i in [first, last] (clamped to [4, n-5]) of
/// |b f' + (sigma^2/2) f'' - (phi - pi_phi)| with f', f'' from eighth-order
/// central differences of the tabulated values f.
double stein_residual_fd(const SdeProblem& problem, const std::vector<double>& grid,
                         const std::vector<double>& f, const SmoothFunction& phi, double pi_phi,
                         std::size_t first = 0, std::size_t last = static_cast<std::size_t>(-1));

struct SemigroupSettings {
    std::vector<double> probes{-2.0, -1.0, 0.5, 1.0, 2.0};
    double T_max = 5.0;
    double tau_fine = 1e-3;
    std::size_t n_traj = 4000;
    int n_times = 50;  ///< checkpoints of P_t phi used for the decay fit
    SchemeKind kind = SchemeKind::TEM;
    std::uint64_t seed = 0;
    int workers = 0;
};

struct SemigroupProbe {
    double x = 0.0;
    double mc_integral = 0.0;  ///< -int_0^T [P_t phi(x) - pi(phi)] dt
    double mc_stderr = 0.0;
    double tail_bound = 0.0;
    double table_value = 0.0;  ///< f(x) - pi(f)
    double gap = 0.0;
    bool pass = false;
};

struct SemigroupReport {
    std::vector<SemigroupProbe> probes;
    double lambda_fit = 0.0;  ///< pooled decay rate of |P_t phi - pi(phi)|
    int fit_points = 0;
    std::string status;       ///< "pass" | "fail" | "inconclusive"
    std::string note;
};

/// Cross-validates the table against the semigroup integral at each probe,
/// with pass iff |gap| <= 3 (stderr + tail bound). The tail beyond T_max is
/// bounded by |P_T phi - pi| / lambda with lambda fitted from the run; a failed
/// fit makes the report inconclusive.
SemigroupReport verify_semigroup_route(const SdeProblem& problem, const SmoothFunction& phi,
                                       const SteinSolution1d& solution,
                                       const SemigroupSettings& settings);

struct GrowthExponent {
    int order = 1;
    double exponent = 0.0;
    double r_squared = 0.0;
    bool skipped = false;
};

/// Fits log|f^(i)| against log(1 + |x|) on |x| >= R/2 for i = 1..4. Orders
/// whose values are all below 1e-10 are skipped.
std::array<GrowthExponent, 4> derivative_growth_fit(const SteinSolution1d& solution);

/// CSV with header x,p,f,f1,f2,f3,f4.
void write_table_csv(std::ostream& os, const StationaryDensity1d& density,
                     const SteinSolution1d& solution);

}  // namespace ergostein
