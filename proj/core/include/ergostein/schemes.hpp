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

#include <string>
#include <string_view>
#include <vector>

#include "ergostein/linalg.hpp"
#include "ergostein/noise.hpp"
#include "ergostein/problem.hpp"

namespace ergostein {

enum class SchemeKind { EM, TEM, PEM, BEM };

std::string_view to_string(SchemeKind k);
/// Parses "em" | "tem" | "pem" | "bem" (case-insensitive).
SchemeKind parse_scheme_kind(std::string_view s);

/// Newton settings for the implicit step.
struct BemSolverSettings {
    double tolerance = 1e-12;  ///< infinity norm of the residual
    int max_iterations = 50;
    bool damping = true;       ///< halve the Newton step while |F| does not decrease
};

struct SchemeSpec {
    SchemeKind kind = SchemeKind::EM;
    double tau = 0.01;  ///< in (0, 1)
    BemSolverSettings bem;

    void validate() const;
};

/// (1 + tau |x|^(4(gamma-1)))^(1/4); switches to log space for |x| >= 1e150.
double taming_denominator(double norm, double tau, double gamma);

Vec tame_drift(const SdeProblem& problem, const Vec& x, double tau);
Mat tame_diffusion(const SdeProblem& problem, const Vec& x, double tau);

/// Radial projection onto the ball of radius tau^(-1/(2 gamma)).
Vec project(const Vec& x, double tau, double gamma);

/// One iterate of the scheme from y with Brownian increment dW.
///
/// EM/TEM/PEM: Y1 = P(y) + b_tau(P(y)) tau + sigma_tau(P(y)) dW.
/// BEM: solves Y1 = y + b(Y1) tau + sigma(y) dW by Newton's method on
/// F(z) = z - y - tau b(z) - sigma(y) dW (safeguarded by bisection in d = 1).
/// Throws SolverFailure carrying the residual if BEM does not converge.
Vec step(const SdeProblem& problem, const SchemeSpec& scheme, const Vec& y, const Vec& dW);

/// Maps describing the continuous interpolation of one step:
///   hat Y_s = g_tau(y0) + s hat_b(gt(y0)) + hat_sigma(gt(y0)) W(s),  gt = g_tilde_tau.
struct ModificationMaps {
    VectorField projection;       ///< P
    VectorField tamed_drift;      ///< b_tau o P
    MatrixField tamed_diffusion;  ///< sigma_tau o P
    VectorField g_tau;            ///< initial-datum map
    VectorField g_tilde_tau;      ///< coefficient-freezing map
    VectorField hat_drift;        ///< hat b_tau, evaluated at g_tilde_tau(x)
    MatrixField hat_diffusion;    ///< hat sigma_tau, evaluated at g_tilde_tau(x)
};

/// EM/TEM/PEM: g = gt = P, hat_b = b_tau, hat_sigma = sigma_tau (so that
/// hat_b(gt(x)) = b_tau(P(x))). BEM: g(x) = x - tau b(x), gt = id, hat_b = b,
/// hat_sigma = sigma.
ModificationMaps modification_maps(const SdeProblem& problem, const SchemeSpec& scheme);

/// Evaluates the interpolation on the bridge grid of `path`. The endpoint
/// reproduces step() bit for bit for the explicit kinds; for BEM it equals
/// g_tau(step()) up to the solver tolerance. Throws InvalidArgument when the
/// path is not a refinement of a step of length scheme.tau.
std::vector<Vec> interpolate(const SdeProblem& problem, const SchemeSpec& scheme, const Vec& y0,
                             const BrownianPath& path);

/// Threshold above which a trajectory is declared divergent.
inline constexpr double kDivergenceThreshold = 1e100;

}  // namespace ergostein
