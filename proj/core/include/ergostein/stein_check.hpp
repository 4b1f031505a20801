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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "ergostein/ergodic.hpp"
#include "ergostein/oracle1d.hpp"
#include "ergostein/problem.hpp"
#include "ergostein/schemes.hpp"

namespace ergostein {

/// Af(x) = grad f(x) . b(x) + 1/2 sum_j D^2 f(x)(sigma_j, sigma_j).
/// Throws DomainEscape if x lies outside f's domain.
double generator_apply(const SdeProblem& problem, const SmoothFunction& f, const Vec& x);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

struct DynkinReport {
    double lhs = 0.0;  ///< E f(X_T) - f(x0)
    double lhs_stderr = 0.0;
    double rhs = 0.0;  ///< int_0^T E Af(X_s) ds (trapezoid on the fine grid)
    double rhs_stderr = 0.0;
    double gap = 0.0;
    double combined_error = 0.0;  ///< standard error of the paired differences
    std::size_t n_traj = 0;
    std::size_t n_diverged = 0;
    bool pass = false;  ///< |gap| <= 3 combined_error and no divergence
};

/// Both sides on a common ensemble of tamed fine-step paths.
DynkinReport dynkin_check(const SdeProblem& problem, const SmoothFunction& f, const Vec& x0,
                          double T, std::size_t n_traj, double tau_fine, std::uint64_t seed,
                          int workers = 0);

/// Monte Carlo estimate of A_tau f at the mapped point y = g_tau(x):
/// E[f(hatY_tau) - f(y)] for the interpolation built from x. For EM and TEM
/// g_tau is the identity. Throws DomainEscape (with the escape fraction) when
/// samples leave f's domain.
McEstimate discrete_generator(const SdeProblem& problem, const SchemeSpec& scheme,
                              const SmoothFunction& f, const Vec& x, std::size_t n_mc,
                              std::uint64_t seed, int workers = 0);

/// The path-independent remainders R3..R6 at x, with y = g_tau(x) and the
/// coefficients frozen at g_tilde_tau(x). R6 compares against the untamed
/// sigma_j(x).
std::array<double, 4> deterministic_remainders(const SdeProblem& problem,
                                               const SchemeSpec& scheme, const SmoothFunction& f,
                                               const Vec& x);

struct RemainderEstimates {
    std::array<double, 6> r{};         ///< E R_1 .. E R_6
    std::array<double, 6> r_stderr{};  ///< zero for R_3..R_6
    std::size_t n_mc = 0;
    int n_sub = 0;
    double atau_f = 0.0;  ///< A_tau f(g_tau(x))
    double atau_stderr = 0.0;
    double tau_generator = 0.0;  ///< tau Af(x)
    /// A_tau f(y) - tau Af(x) - sum_i R_i on common noise, with the Ito sum
    /// sum_k grad f(hatY_{s_k}) hat sigma dW_k (mean zero) removed.
    double identity_gap = 0.0;
    double identity_error = 0.0;
    double identity_floor = 0.0;  ///< 64 eps times the magnitude of the terms
    bool identity_pass = false;   ///< |gap| <= 3 error + floor
    std::size_t n_diverged = 0;
};

/// R1 and R2 use the trapezoid rule on n_sub panels of the interpolated path.
RemainderEstimates remainder_terms(const SdeProblem& problem, const SchemeSpec& scheme,
                                   const SmoothFunction& f, const Vec& x, std::size_t n_mc,
                                   int n_sub, std::uint64_t seed, int workers = 0);

struct RepresentationSettings {
    std::size_t n_samples = 100000;  ///< retained pi_tau samples (one inner draw each)
    /// Steps discarded before sampling; 0 means min(10^6, ceil(20 / tau)).
    std::size_t burn_in = 0;
    /// Steps between retained samples; 0 means ceil(1 / tau).
    std::size_t stride = 0;
    int n_sub = 16;
    double x0 = 0.0;
    bool ito_control = true;
    int n_batches = 32;
    std::uint64_t seed = 0;
    int workers = 0;
};

struct RepresentationReport {
    double tau = 0.0;
    double pi_phi = 0.0;
    double pi_tau_estimate = 0.0;  ///< time average over the sampled segment
    double lhs = 0.0;              ///< |pi_tau(phi) - pi(phi)|
    double lhs_stderr = 0.0;
    double rhs = 0.0;  ///< tau^-1 |E A_tau f(g X0) - sum_i E R_i|
    double rhs_stderr = 0.0;
    double atau_term = 0.0;  ///< tau^-1 E A_tau f(g X0), reported separately
    double atau_term_stderr = 0.0;
    std::array<double, 6> r_mean{};  ///< tau^-1 E R_i
    double oracle_error = 0.0;       ///< quadrature error of pi(phi)
    double combined_error = 0.0;     ///< hypot of the two stderrs plus oracle_error
    std::size_t n_mc = 0;
    std::size_t chain_steps = 0;
    double equilibration_gap = 0.0;  ///< first-half minus second-half mean of phi
    std::string verdict;             ///< "pass" | "fail" | "inconclusive"
};

/// Checks |pi_tau(phi) - pi(phi)| = tau^-1 |E A_tau f(g X0) - sum_i E R_i(X0)|
/// with X0 drawn from one long chain and (pi(phi), f_phi) from the 1-D oracle.
/// Verdict pass iff |LHS - RHS| <= 3 combined error; inconclusive when the
/// two halves of the chain disagree by more than 4 standard errors.
RepresentationReport error_representation_check(const SdeProblem& problem,
                                                 const SchemeSpec& scheme,
                                                 const SmoothFunction& phi,
                                                 const StationaryDensity1d& density,
                                                 const SteinSolution1d& solution,
                                                 const RepresentationSettings& settings);

}  // namespace ergostein
