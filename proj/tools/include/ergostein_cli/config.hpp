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
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergostein/problem.hpp"
#include "ergostein/schemes.hpp"

namespace ergostein::cli {

/// Malformed or inconsistent configuration. line() is 0 when unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

struct ProblemConfig {
    std::string name = "P2";  ///< gallery id, "radial" or "poly"
    /// Radial family only; unset keys take the defaults 1, 1, 1, 1, 0.
    std::optional<int> dim;
    std::optional<double> a, c, nu, kappa;
    std::vector<double> drift;      ///< poly only, increasing degree
    std::vector<double> diffusion;  ///< poly only
    std::optional<double> gamma, L1, L2, L3, p_star, growth_const;
    std::optional<bool> theorem_study;

    bool operator==(const ProblemConfig&) const = default;
};

struct SchemeConfig {
    std::string kind = "tem";
    double tau = 0.01;
    std::vector<double> tau_grid{0.04, 0.02, 0.01, 0.005, 0.0025};
    double bem_tolerance = 1e-12;
    int bem_max_iterations = 50;

    bool operator==(const SchemeConfig&) const = default;
};

struct RunSection {
    std::string phi = "tanh";
    double x0 = 0.0;
    std::uint64_t seed = 0;
    std::size_t n_steps = 100000;
    std::size_t n_traj = 200;
    std::size_t n_mc = 100000;
    int n_sub = 16;
    int n_chains = 4;
    int n_batches = 32;
    double burn_in_fraction = 0.2;
    std::size_t thin = 100;  ///< trace stride
    double p = 1.0;
    int samples = 10000;     ///< assumption checker sample count
    double T = 1.0;
    double tau_fine = 1e-3;
    std::string estimator = "stein-control";
    std::size_t pilot_steps = 200000;
    std::size_t min_steps = 100000;
    std::size_t max_steps = 20000000;
    double budget_scale = 1.0;
    std::size_t moment_steps = 100000;
    double slope_lo = 0.8;
    double slope_hi = 1.2;

    bool operator==(const RunSection&) const = default;
};

struct OutputConfig {
    std::string dir = "out";
    std::string format = "json";

    bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
    ProblemConfig problem;
    SchemeConfig scheme;
    RunSection run;
    OutputConfig output;

    bool operator==(const RunConfig&) const = default;
};

/// Parses INI text. Sections and keys are strict: unknown sections or keys,
/// duplicates, unparsable values and out-of-range values raise ConfigError
/// with the offending line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical INI text of the fully resolved configuration; parse_config of
/// the result compares equal to the input.
std::string serialize_config(const RunConfig& config);

/// Hex SHA-256 of serialize_config(config).
std::string config_digest(const RunConfig& config);

/// Throws ConfigError on semantic problems (non-positive counts, tau outside
/// (0, 1), unknown ids).
void validate(const RunConfig& config);

SdeProblem build_problem(const ProblemConfig& config);
SchemeSpec build_scheme(const SchemeConfig& config, double tau);

}  // namespace ergostein::cli
