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

#include "ergostein/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ergostein/error.hpp"

namespace ergostein {

namespace {

// k-th derivative of x -> h(alpha + beta |x|^2) along dirs, given h^(0..4)
// evaluated at q = alpha + beta |x|^2 (Faa di Bruno with a quadratic inner map).
double radial_form(const std::array<double, 5>& h, double beta, const Vec& x,
                   std::span<const Vec> dirs) {
    const std::size_t k = dirs.size();
    std::array<double, 4> qv{};
    for (std::size_t i = 0; i < k; ++i) qv[i] = 2.0 * beta * x.dot(dirs[i]);
    auto qq = [&](std::size_t i, std::size_t j) { return 2.0 * beta * dirs[i].dot(dirs[j]); };
    switch (k) {
        case 0:
            return h[0];
        case 1:
            return h[1] * qv[0];
        case 2:
            return h[2] * qv[0] * qv[1] + h[1] * qq(0, 1);
        case 3:
            return h[3] * qv[0] * qv[1] * qv[2] +
                   h[2] * (qq(0, 1) * qv[2] + qq(0, 2) * qv[1] + qq(1, 2) * qv[0]);
        case 4:
            return h[4] * qv[0] * qv[1] * qv[2] * qv[3] +
                   h[3] * (qq(0, 1) * qv[2] * qv[3] + qq(0, 2) * qv[1] * qv[3] +
                           qq(0, 3) * qv[1] * qv[2] + qq(1, 2) * qv[0] * qv[3] +
                           qq(1, 3) * qv[0] * qv[2] + qq(2, 3) * qv[0] * qv[1]) +
                   h[2] * (qq(0, 1) * qq(2, 3) + qq(0, 2) * qq(1, 3) + qq(0, 3) * qq(1, 2));
        default:
            throw InvalidArgument("radial_form: derivative order must be 0..4");
    }
}

// k-th derivative of a polynomial with coefficients in increasing degree.
double poly_derivative(const std::vector<double>& c, int k, double x) {
    double acc = 0.0;
    for (int i = static_cast<int>(c.size()) - 1; i >= k; --i) {
        double fall = 1.0;
        for (int j = 0; j < k; ++j) fall *= static_cast<double>(i - j);
        acc = acc * x + c[static_cast<std::size_t>(i)] * fall;
    }
    return acc;
}

double dir_product(std::span<const Vec> dirs, int index) {
    double p = 1.0;
    for (const auto& v : dirs) p *= v(index);
    return p;
}

void check_order(std::span<const Vec> dirs, std::size_t k, const char* who) {
    if (dirs.size() != k) {
        std::ostringstream os;
        os << who << ": expected " << k << " directions, got " << dirs.size();
        throw InvalidArgument(os.str());
    }
}

// Sup of |d^k/dt^k phi(t e_0)| for k = 1..4 over a dense scan of [-50, 50].
double sampled_seminorm(const SmoothFunction& f) {
    Vec e = Vec::Zero(f.dim);
    e(0) = 1.0;
    std::array<Vec, 4> dirs{e, e, e, e};
    double total = 0.0;
    for (int k = 1; k <= 4; ++k) {
        double sup = 0.0;
        for (int i = 0; i <= 20000; ++i) {
            Vec x = Vec::Zero(f.dim);
            x(0) = -50.0 + 100.0 * i / 20000.0;
            sup = std::max(sup, std::abs(f.deriv[k - 1](x, std::span<const Vec>(dirs.data(), k))));
        }
        total += sup;
    }
    return total;
}

SmoothFunction make_radial_function(std::string name, int dim, double alpha, double beta,
                                    std::function<std::array<double, 5>(double)> profile) {
    SmoothFunction f;
    f.name = std::move(name);
    f.dim = dim;
    f.value = [=](const Vec& x) { return profile(alpha + beta * x.squaredNorm())[0]; };
    for (int k = 1; k <= 4; ++k) {
        f.deriv[k - 1] = [=](const Vec& x, std::span<const Vec> dirs) {
            check_order(dirs, static_cast<std::size_t>(k), "radial test function");
            return radial_form(profile(alpha + beta * x.squaredNorm()), beta, x, dirs);
        };
    }
    return f;
}

}  // namespace

bool Box::contains(const Vec& x) const {
    for (int i = 0; i < x.size(); ++i) {
        if (!(x(i) >= lo(i) && x(i) <= hi(i))) return false;
    }
    return true;
}

double SmoothFunction::derivative(const Vec& x, std::span<const Vec> dirs) const {
    const std::size_t k = dirs.size();
    if (k < 1 || k > 4) throw InvalidArgument("SmoothFunction::derivative: order must be 1..4");
    if (!deriv[k - 1]) {
        throw InvalidArgument("SmoothFunction '" + name + "' has no derivative of order " +
                              std::to_string(k));
    }
    return deriv[k - 1](x, dirs);
}

Vec SmoothFunction::gradient(const Vec& x) const {
    Vec g(dim);
    Vec e = Vec::Zero(dim);
    for (int i = 0; i < dim; ++i) {
        e(i) = 1.0;
        g(i) = deriv[0](x, std::span<const Vec>(&e, 1));
        e(i) = 0.0;
    }
    return g;
}

double SmoothFunction::hessian_form(const Vec& x, const Vec& u, const Vec& v) const {
    std::array<Vec, 2> dirs{u, v};
    return deriv[1](x, dirs);
}

void AssumptionParams::validate() const {
    auto fail = [](const std::string& msg) { throw InvalidArgument("AssumptionParams: " + msg); };
    if (!(gamma > 1.0)) fail("gamma must be > 1 (got " + std::to_string(gamma) + ")");
    if (!(L1 > 0.0)) fail("L1 must be > 0");
    if (!(L2 > 0.0)) fail("L2 must be > 0");
    if (!(L3 > 0.0)) fail("L3 must be > 0");
    if (!(p_star >= 2.0)) fail("p_star must be >= 2");
    if (!(growth_const > 0.0)) fail("growth_const must be > 0");
    if (theorem_study && p_star < required_p_star()) {
        fail("theorem study requires 2 p_star >= max(5 gamma - 4, 4 gamma + 1) = " +
             std::to_string(2.0 * required_p_star()));
    }
}

double AssumptionParams::required_p_star() const {
    return 0.5 * std::max(5.0 * gamma - 4.0, 4.0 * gamma + 1.0);
}

std::string_view to_string(ProblemStatus s) {
    switch (s) {
        case ProblemStatus::Full:
            return "A1/A2";
        case ProblemStatus::A1Partial:
            return "A1-partial";
        case ProblemStatus::Lipschitz:
            return "Lipschitz";
    }
    return "unknown";
}

Mat SdeProblem::drift_jacobian(const Vec& x) const {
    Mat J(dim_state, dim_state);
    Vec e = Vec::Zero(dim_state);
    for (int i = 0; i < dim_state; ++i) {
        e(i) = 1.0;
        J.col(i) = drift_deriv[0](x, std::span<const Vec>(&e, 1));
        e(i) = 0.0;
    }
    return J;
}

void SdeProblem::validate_shape(const Vec& probe) const {
    if (dim_state < 1 || dim_state > kMaxDim || dim_noise < 1 || dim_noise > kMaxDim) {
        throw InvalidArgument("problem '" + name + "': dimensions must be in 1.." +
                              std::to_string(kMaxDim));
    }
    if (!drift || !diffusion) throw InvalidArgument("problem '" + name + "': missing coefficients");
    for (int k = 0; k < 4; ++k) {
        if (!drift_deriv[k] || !diffusion_deriv[k]) {
            throw InvalidArgument("problem '" + name + "': missing derivative evaluator of order " +
                                  std::to_string(k + 1));
        }
    }
    const Mat s = diffusion(probe);
    if (s.rows() != dim_state || s.cols() != dim_noise) {
        throw InvalidArgument("problem '" + name + "': diffusion has wrong shape");
    }
}

SdeProblem radial_problem(const std::string& name, int dim, const RadialCoefficients& coef,
                          const AssumptionParams& params, ProblemStatus status) {
    if (dim < 1 || dim > kMaxDim) throw InvalidArgument("radial_problem: bad dimension");
    SdeProblem p;
    p.name = name;
    p.family = "radial";
    p.dim_state = dim;
    p.dim_noise = dim;
    p.params = params;
    p.status = status;
    const double a = coef.a, c = coef.c, nu = coef.nu, kappa = coef.kappa;

    p.drift = [=](const Vec& x) -> Vec { return -(a + c * x.squaredNorm()) * x; };
    p.drift_deriv[0] = [=](const Vec& x, std::span<const Vec> d) -> Vec {
        check_order(d, 1, "radial drift");
        return -a * d[0] - c * (2.0 * x.dot(d[0]) * x + x.squaredNorm() * d[0]);
    };
    p.drift_deriv[1] = [=](const Vec& x, std::span<const Vec> d) -> Vec {
        check_order(d, 2, "radial drift");
        return -2.0 * c * (d[0].dot(d[1]) * x + x.dot(d[0]) * d[1] + x.dot(d[1]) * d[0]);
    };
    p.drift_deriv[2] = [=](const Vec&, std::span<const Vec> d) -> Vec {
        check_order(d, 3, "radial drift");
        return -2.0 * c * (d[0].dot(d[1]) * d[2] + d[0].dot(d[2]) * d[1] + d[1].dot(d[2]) * d[0]);
    };
    p.drift_deriv[3] = [=](const Vec& x, std::span<const Vec> d) -> Vec {
        check_order(d, 4, "radial drift");
        return Vec::Zero(x.size());
    };

    // sigma = nu * h(q) I with h = sqrt, q = 1 + kappa |x|^2.
    auto profile = [=](double q) {
        const double r = std::sqrt(q);
        return std::array<double, 5>{nu * r, nu * 0.5 / r, -nu * 0.25 / (q * r),
                                     nu * 0.375 / (q * q * r), -nu * 0.9375 / (q * q * q * r)};
    };
    p.diffusion = [=](const Vec& x) -> Mat {
        const double s = nu * std::sqrt(1.0 + kappa * x.squaredNorm());
        return s * Mat::Identity(x.size(), x.size());
    };
    for (int k = 1; k <= 4; ++k) {
        p.diffusion_deriv[k - 1] = [=](const Vec& x, std::span<const Vec> d) -> Mat {
            check_order(d, static_cast<std::size_t>(k), "radial diffusion");
            const double s = radial_form(profile(1.0 + kappa * x.squaredNorm()), kappa, x, d);
            return s * Mat::Identity(x.size(), x.size());
        };
    }
    return p;
}

SdeProblem poly_problem(const std::string& name, std::vector<double> drift_coeffs,
                        std::vector<double> diffusion_coeffs, const AssumptionParams& params,
                        ProblemStatus status) {
    if (drift_coeffs.empty()) drift_coeffs.push_back(0.0);
    if (diffusion_coeffs.empty()) diffusion_coeffs.push_back(0.0);
    SdeProblem p;
    p.name = name;
    p.family = "poly";
    p.dim_state = 1;
    p.dim_noise = 1;
    p.params = params;
    p.status = status;
    p.drift = [c = drift_coeffs](const Vec& x) { return scalar_vec(poly_derivative(c, 0, x(0))); };
    p.diffusion = [s = diffusion_coeffs](const Vec& x) -> Mat {
        Mat m(1, 1);
        m(0, 0) = poly_derivative(s, 0, x(0));
        return m;
    };
    for (int k = 1; k <= 4; ++k) {
        p.drift_deriv[k - 1] = [c = drift_coeffs, k](const Vec& x, std::span<const Vec> d) {
            check_order(d, static_cast<std::size_t>(k), "poly drift");
            return scalar_vec(poly_derivative(c, k, x(0)) * dir_product(d, 0));
        };
        p.diffusion_deriv[k - 1] = [s = diffusion_coeffs, k](const Vec& x,
                                                             std::span<const Vec> d) -> Mat {
            check_order(d, static_cast<std::size_t>(k), "poly diffusion");
            Mat m(1, 1);
            m(0, 0) = poly_derivative(s, k, x(0)) * dir_product(d, 0);
            return m;
        };
    }
    return p;
}

SdeProblem ou_problem() {
    AssumptionParams prm;
    // Lipschitz reference: gamma is nominal (only used if a tamed scheme is run
    // on it) and the superlinear coercivity bound does not hold.
    prm.gamma = 2.0;
    prm.L1 = 1.0;
    prm.L2 = 6.0;
    prm.L3 = 1e-3;
    prm.p_star = 2.0;
    prm.growth_const = 1.0;
    auto p = radial_problem("P1", 1, {1.0, 0.0, std::sqrt(2.0), 0.0}, prm,
                            ProblemStatus::Lipschitz);
    p.status_note = "Ornstein-Uhlenbeck; globally Lipschitz, outside the superlinear class";
    return p;
}

SdeProblem dissipative_cubic_problem(double nu) {
    AssumptionParams prm;
    prm.gamma = 3.0;
    prm.L1 = 0.5;
    prm.L2 = 50.0;
    prm.L3 = 0.5;
    prm.p_star = 6.5;
    prm.growth_const = 6.0;
    prm.theorem_study = true;
    auto p = radial_problem("P2", 1, {1.0, 1.0, nu, 1.0}, prm, ProblemStatus::Full);
    p.status_note = "dissipative cubic drift with nondegenerate multiplicative noise";
    return p;
}

SdeProblem double_well_problem() {
    AssumptionParams prm;
    prm.gamma = 3.0;
    prm.L1 = 0.5;  // claimed; monotonicity fails near the origin
    prm.L2 = 8.0;
    prm.L3 = 0.5;
    prm.p_star = 2.0;
    prm.growth_const = 6.0;
    auto p = radial_problem("P3", 1, {-1.0, 1.0, std::sqrt(2.0), 0.0}, prm,
                            ProblemStatus::A1Partial);
    p.status_note = "double well; coercive but not globally monotone (A1-partial)";
    return p;
}

SdeProblem gallery_problem(std::string_view name) {
    if (name == "P1" || name == "ou") return ou_problem();
    if (name == "P2" || name == "dissipative-cubic") return dissipative_cubic_problem();
    if (name == "P3" || name == "double-well") return double_well_problem();
    throw InvalidArgument("unknown gallery problem '" + std::string(name) + "'");
}

std::vector<std::string> gallery_names() { return {"P1", "P2", "P3"}; }

SmoothFunction constant_function(double c, int dim) {
    SmoothFunction f;
    f.name = "const";
    f.dim = dim;
    f.value = [c](const Vec&) { return c; };
    for (auto& d : f.deriv) d = [](const Vec&, std::span<const Vec>) { return 0.0; };
    f.seminorm_bound = 0.0;
    return f;
}

SmoothFunction coordinate_function(int dim, int index) {
    SmoothFunction f;
    f.name = "x";
    f.dim = dim;
    f.value = [index](const Vec& x) { return x(index); };
    f.deriv[0] = [index](const Vec&, std::span<const Vec> d) { return d[0](index); };
    for (int k = 1; k < 4; ++k) f.deriv[k] = [](const Vec&, std::span<const Vec>) { return 0.0; };
    f.seminorm_bound = 1.0;
    return f;
}

SmoothFunction tanh_function(int dim) {
    SmoothFunction f;
    f.name = "tanh";
    f.dim = dim;
    f.value = [](const Vec& x) { return std::tanh(x(0)); };
    auto jet = [](double x) {
        const double t = std::tanh(x);
        const double s = 1.0 - t * t;
        return std::array<double, 5>{t, s, -2.0 * t * s, s * (6.0 * t * t - 2.0),
                                     t * s * (16.0 - 24.0 * t * t)};
    };
    for (int k = 1; k <= 4; ++k) {
        f.deriv[k - 1] = [jet, k](const Vec& x, std::span<const Vec> d) {
            return jet(x(0))[static_cast<std::size_t>(k)] * dir_product(d, 0);
        };
    }
    f.seminorm_bound = sampled_seminorm(f);
    return f;
}

SmoothFunction squared_norm_function(int dim) {
    auto f = make_radial_function("x2", dim, 0.0, 1.0, [](double q) {
        return std::array<double, 5>{q, 1.0, 0.0, 0.0, 0.0};
    });
    f.seminorm_bound = std::numeric_limits<double>::infinity();
    return f;
}

SmoothFunction saturated_square_function(int dim) {
    auto f = make_radial_function("x2_sat", dim, 0.0, 1.0, [](double q) {
        const double u = 1.0 / (1.0 + q);
        return std::array<double, 5>{q * u, u * u, -2.0 * u * u * u, 6.0 * u * u * u * u,
                                     -24.0 * u * u * u * u * u};
    });
    f.seminorm_bound = sampled_seminorm(f);
    return f;
}

SmoothFunction polynomial_function(std::vector<double> coeffs, std::string name) {
    SmoothFunction f;
    f.name = std::move(name);
    f.dim = 1;
    f.value = [c = coeffs](const Vec& x) { return poly_derivative(c, 0, x(0)); };
    for (int k = 1; k <= 4; ++k) {
        f.deriv[k - 1] = [c = coeffs, k](const Vec& x, std::span<const Vec> d) {
            return poly_derivative(c, k, x(0)) * dir_product(d, 0);
        };
    }
    f.seminorm_bound = coeffs.size() <= 2 ? (coeffs.size() == 2 ? std::abs(coeffs[1]) : 0.0)
                                          : std::numeric_limits<double>::infinity();
    return f;
}

SmoothFunction named_test_function(std::string_view name, int dim) {
    if (name == "const") return constant_function(1.0, dim);
    if (name == "x") return coordinate_function(dim, 0);
    if (name == "tanh") return tanh_function(dim);
    if (name == "x2") return squared_norm_function(dim);
    if (name == "x2_sat") return saturated_square_function(dim);
    throw InvalidArgument("unknown test function '" + std::string(name) + "'");
}

std::vector<std::string> test_function_names() { return {"const", "x", "tanh", "x2", "x2_sat"}; }

}  // namespace ergostein
