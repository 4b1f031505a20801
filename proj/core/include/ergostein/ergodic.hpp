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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ergostein/linalg.hpp"
#include "ergostein/noise.hpp"
#include "ergostein/problem.hpp"
#include "ergostein/schemes.hpp"

namespace ergostein {

using ScalarField = std::function<double(const Vec&)>;

/// Streaming handle over Y_0, Y_1, ..., Y_n of one chain.
///
/// next() advances `thin` steps (or fewer at the end) and exposes the new state;
/// the initial state is exposed before the first call. The chain stops early
/// when |Y_k| exceeds kDivergenceThreshold or becomes non-finite. The problem
/// must outlive the handle.
class Trajectory {
public:
    Trajectory(const SdeProblem& problem, const SchemeSpec& scheme, Vec y0, std::size_t n_steps,
               NoiseStream stream, std::size_t thin = 1);

    /// False once n_steps is reached or the chain diverged.
    bool next();

    std::size_t k() const { return k_; }
    double t() const { return static_cast<double>(k_) * scheme_.tau; }
    const Vec& state() const { return y_; }
    bool diverged() const { return divergence_step_.has_value(); }
    std::optional<std::size_t> divergence_step() const { return divergence_step_; }
    std::size_t n_steps() const { return n_steps_; }
    std::size_t thin() const { return thin_; }
    const NoiseStream& stream() const { return stream_; }
    const SchemeSpec& scheme() const { return scheme_; }

private:
    const SdeProblem* problem_;
    SchemeSpec scheme_;
    Vec y_;
    std::size_t n_steps_;
    NoiseStream stream_;
    std::size_t thin_;
    std::size_t k_ = 0;
    std::optional<std::size_t> divergence_step_;
};

/// Starts a chain. Throws InvalidArgument if n_steps == 0 or thin == 0.
/// A BEM solver failure surfaces from Trajectory::next() as SolverFailure with
/// the step index set.
Trajectory simulate_chain(const SdeProblem& problem, const SchemeSpec& scheme, const Vec& y0,
                          std::size_t n_steps, const NoiseStream& stream, std::size_t thin = 1);

struct ErgodicEstimate {
    double phi_mean = 0.0;
    double std_error = 0.0;    ///< batch-means standard error
    std::size_t n_steps = 0;
    std::size_t burn_in = 0;
    int n_batches = 0;
    std::size_t n_samples = 0; ///< retained states averaged
    std::uint64_t seed = 0;
    bool diverged = false;
    std::optional<std::size_t> divergence_step;
    int n_chains = 1;
};

/// Averages phi over the retained states with k > burn_in and estimates the
/// standard error from n_batches contiguous batch means. Consumes the handle.
/// A diverged chain yields phi_mean = NaN and the divergence step.
ErgodicEstimate time_average(const ScalarField& phi, Trajectory& trajectory, std::size_t burn_in,
                             int n_batches = 32);

struct ChainAverageSpec {
    std::size_t n_steps = 100000;
    /// Negative means 20% of n_steps.
    double burn_in_fraction = 0.2;
    int n_batches = 32;
    std::size_t thin = 1;
    int n_chains = 1;  ///< independent chains with trajectory ids 0..n_chains-1
};

/// Time average pooled over n_chains chains started at y0. Batch means of all
/// chains are pooled for the standard error. Bitwise independent of `workers`.
ErgodicEstimate chain_average(const SdeProblem& problem, const SchemeSpec& scheme,
                              const ScalarField& phi, const Vec& y0, const ChainAverageSpec& spec,
                              std::uint64_t seed, int workers = 0);

struct EnsembleEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_traj = 0;
    std::size_t n_diverged = 0;
    double divergence_fraction = 0.0;
};

/// Monte Carlo estimate of E phi(Y_n) with n = round(T / tau), over n_traj
/// independent trajectory ids. Diverged paths are excluded from the mean and
/// counted. T = 0 returns phi(x0) exactly.
EnsembleEstimate ensemble_expectation(const SdeProblem& problem, const SchemeSpec& scheme,
                                      const ScalarField& phi, const Vec& x0, double T,
                                      std::size_t n_traj, std::uint64_t seed, int workers = 0);

struct MomentTrace {
    double p = 1.0;
    double running_sup = 0.0;
    /// (k, ensemble mean of |Y_k|^(2p)) at k = 0, 1, 2, 4, ..., n_steps.
    std::vector<std::pair<std::size_t, double>> checkpoints;
    std::size_t n_traj = 0;
    std::size_t n_diverged = 0;

    /// True if the supremum is attained strictly before the last checkpoint.
    bool sup_before_final() const;
};

/// Diverged trajectories make the affected checkpoints (and running_sup) infinite.
MomentTrace moment_trace(const SdeProblem& problem, const SchemeSpec& scheme, const Vec& y0,
                         double p, std::size_t n_traj, std::size_t n_steps, std::uint64_t seed,
                         int workers = 0);

struct DecayFit {
    double lambda_hat = 0.0;
    double r_squared = 0.0;
    /// (t, log E|eta_t|^(2q)).
    std::vector<std::pair<double, double>> series;
    bool skipped = false;
    std::string notice;  ///< zero-direction notice or non-monotone warning
};

struct DecaySettings {
    double tau_fine = 1e-4;
    int n_points = 40;  ///< fit times i T / n_points for i = 0..n_points
};

/// Simulates (X, eta) jointly: X by the tamed scheme at tau_fine and
/// eta_{k+1} = eta_k + Db(X_k) eta_k tau + sum_j D sigma_j(X_k) eta_k dW_j,
/// then fits log E|eta_t|^(2q) = c - 2 q lambda t by least squares.
DecayFit first_variation_decay(const SdeProblem& problem, const Vec& x, const Vec& v, double q,
                               double T, std::size_t n_traj, std::uint64_t seed,
                               const DecaySettings& settings = {}, int workers = 0);

}  // namespace ergostein
