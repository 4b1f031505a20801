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
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ergostein/linalg.hpp"

namespace ergostein {

/// Evaluators of k-linear forms. `dirs.size()` is the order k.
using ScalarForm = std::function<double(const Vec& x, std::span<const Vec> dirs)>;
using VectorForm = std::function<Vec(const Vec& x, std::span<const Vec> dirs)>;
/// Returns the d x m matrix whose column j is the k-th derivative of sigma_j.
using MatrixForm = std::function<Mat(const Vec& x, std::span<const Vec> dirs)>;

using VectorField = std::function<Vec(const Vec&)>;
using MatrixField = std::function<Mat(const Vec&)>;

/// Axis-aligned box, used as the domain of table-backed functions.
struct Box {
    Vec lo;
    Vec hi;

    bool contains(const Vec& x) const;
};

/// A real function on R^d together with its first four derivatives.
///
/// Used both for test functions phi and for Stein solutions f. Evaluators are
/// pure and may be called concurrently.
struct SmoothFunction {
    std::string name;
    int dim = 1;
    std::function<double(const Vec&)> value;
    std::array<ScalarForm, 4> deriv;
    /// Sampled bound on the seminorm |phi|_4 (sum of the sup norms of
    /// derivatives 1..4); infinity when unbounded.
    double seminorm_bound = std::numeric_limits<double>::infinity();
    /// Set for table-backed functions; evaluation outside throws DomainEscape.
    std::optional<Box> domain;

    double operator()(const Vec& x) const { return value(x); }
    /// k-th derivative applied to `dirs` (k = dirs.size(), 1..4).
    double derivative(const Vec& x, std::span<const Vec> dirs) const;
    Vec gradient(const Vec& x) const;
    /// Second derivative as a bilinear form, D^2 f(x)(u, v).
    double hessian_form(const Vec& x, const Vec& u, const Vec& v) const;
    bool in_domain(const Vec& x) const { return !domain || domain->contains(x); }
};

using TestFunction = SmoothFunction;

/// Constants of the dissipativity and growth conditions.
struct AssumptionParams {
    double gamma = 3.0;         ///< growth exponent, > 1
    double L1 = 1.0;            ///< monotonicity constant
    double L2 = 1.0;            ///< coercivity offset
    double L3 = 1.0;            ///< coercivity rate
    double p_star = 2.0;        ///< moment exponent, >= 2
    double growth_const = 1.0;  ///< C of the derivative growth bounds
    /// Tagged problems must also satisfy 2 p* >= max(5 gamma - 4, 4 gamma + 1).
    bool theorem_study = false;

    /// Throws InvalidArgument naming the violated constraint.
    void validate() const;
    /// Smallest p* admissible for first-order ergodic error studies.
    double required_p_star() const;
};

enum class ProblemStatus {
    Full,       ///< all dissipativity and growth conditions expected to hold
    A1Partial,  ///< coercive but not globally monotone
    Lipschitz,  ///< globally Lipschitz reference problem outside the superlinear class
};

std::string_view to_string(ProblemStatus s);

/// dX = b(X) dt + sigma(X) dW on R^d driven by an m-dimensional Wiener process.
struct SdeProblem {
    std::string name;
    std::string family;
    int dim_state = 1;
    int dim_noise = 1;
    VectorField drift;
    std::array<VectorForm, 4> drift_deriv;
    MatrixField diffusion;
    std::array<MatrixForm, 4> diffusion_deriv;
    AssumptionParams params;
    ProblemStatus status = ProblemStatus::Full;
    std::string status_note;

    /// Jacobian of the drift assembled from the first derivative form.
    Mat drift_jacobian(const Vec& x) const;
    /// Throws InvalidArgument if any evaluator is missing or if the
    /// diffusion at `probe` has the wrong shape.
    void validate_shape(const Vec& probe) const;
};

/// Coefficients of the radial family b(x) = -(a + c|x|^2) x,
/// sigma(x) = nu sqrt(1 + kappa |x|^2) I_d (so m = d).
struct RadialCoefficients {
    double a = 1.0;
    double c = 1.0;
    double nu = 1.0;
    double kappa = 0.0;
};

SdeProblem radial_problem(const std::string& name, int dim, const RadialCoefficients& coef,
                          const AssumptionParams& params,
                          ProblemStatus status = ProblemStatus::Full);

/// Scalar problem with polynomial drift and polynomial diffusion. Coefficients
/// are in increasing degree: {c0, c1, ...} means c0 + c1 x + ...
SdeProblem poly_problem(const std::string& name, std::vector<double> drift_coeffs,
                        std::vector<double> diffusion_coeffs, const AssumptionParams& params,
                        ProblemStatus status = ProblemStatus::Full);

/// P1: Ornstein-Uhlenbeck, b = -x, sigma = sqrt(2). Exact invariant law N(0, 1).
SdeProblem ou_problem();
/// P2: b = -x - x^3, sigma = nu sqrt(1 + x^2).
SdeProblem dissipative_cubic_problem(double nu = 0.5);
/// P3: b = x - x^3, sigma = sqrt(2). Coercive, not globally monotone.
SdeProblem double_well_problem();

/// Looks up "P1"/"ou", "P2"/"dissipative-cubic", "P3"/"double-well".
SdeProblem gallery_problem(std::string_view name);
std::vector<std::string> gallery_names();

/// Test functions. All take the first coordinate or |x| as indicated.
SmoothFunction constant_function(double c, int dim = 1);
SmoothFunction coordinate_function(int dim = 1, int index = 0);
SmoothFunction tanh_function(int dim = 1);               ///< tanh(x_0)
SmoothFunction squared_norm_function(int dim = 1);       ///< |x|^2
SmoothFunction saturated_square_function(int dim = 1);   ///< |x|^2 / (1 + |x|^2)
/// Scalar polynomial sum_i c_i x^i (d = 1).
SmoothFunction polynomial_function(std::vector<double> coeffs, std::string name = "poly");

/// "const", "x", "tanh", "x2", "x2_sat"; throws InvalidArgument otherwise.
SmoothFunction named_test_function(std::string_view name, int dim = 1);
std::vector<std::string> test_function_names();

}  // namespace ergostein
