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

#include "ergostein/schemes.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "ergostein/error.hpp"

namespace ergostein {

namespace {

struct ExplicitParts {
    Vec base;   // P(y)
    Vec drift;  // b_tau(P(y))
    Mat diff;   // sigma_tau(P(y))
};

// Shared by step() and interpolate() so both produce identical bits.
inline Vec affine_update(const Vec& base, double s, const Vec& drift, const Mat& diff,
                         const Vec& w) {
    Vec noise = diff * w;
    return base + s * drift + noise;
}

Vec untamed_drift(const SdeProblem& p, const Vec& x) { return p.drift(x); }

ExplicitParts explicit_parts(const SdeProblem& p, SchemeKind kind, double tau, const Vec& y) {
    switch (kind) {
        case SchemeKind::EM:
            return {y, p.drift(y), p.diffusion(y)};
        case SchemeKind::TEM: {
            const double den = taming_denominator(y.norm(), tau, p.params.gamma);
            return {y, p.drift(y) / den, p.diffusion(y) / den};
        }
        case SchemeKind::PEM: {
            Vec py = project(y, tau, p.params.gamma);
            return {py, p.drift(py), p.diffusion(py)};
        }
        case SchemeKind::BEM:
            break;
    }
    throw InvalidArgument("explicit_parts: BEM is implicit");
}

double inf_norm(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

// Rounding floor for F(z) = z - tau b(z) - c.
double residual_floor(const Vec& z, const Vec& tb, const Vec& c) {
    const double scale = std::max({inf_norm(z), inf_norm(tb), inf_norm(c), 1.0});
    return 64.0 * std::numeric_limits<double>::epsilon() * scale;
}

Vec solve_bem_scalar(const SdeProblem& p, double tau, const Vec& c, const BemSolverSettings& cfg) {
    const Vec one = scalar_vec(1.0);
    auto F = [&](double z) { return z - tau * p.drift(scalar_vec(z))(0) - c(0); };
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    double z = c(0);
    double fz = F(z);
    for (int it = 0; it < cfg.max_iterations; ++it) {
        if (!std::isfinite(fz)) break;
        if (std::abs(fz) <= cfg.tolerance) return scalar_vec(z);
        if (fz > 0.0) hi = std::min(hi, z); else lo = std::max(lo, z);
        const double dF = 1.0 - tau * p.drift_deriv[0](scalar_vec(z), std::span<const Vec>(&one, 1))(0);
        double next = (dF > 0.0) ? z - fz / dF : std::numeric_limits<double>::quiet_NaN();
        const bool inside = std::isfinite(next) && next > lo && next < hi;
        if (!inside) {
            if (std::isfinite(lo) && std::isfinite(hi)) {
                next = 0.5 * (lo + hi);
            } else {
                const double stride = 2.0 * std::max(1.0, std::abs(z));
                next = fz > 0.0 ? z - stride : z + stride;
            }
        }
        if (std::isfinite(lo) && std::isfinite(hi) &&
            hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(z))) {
            const Vec zv = scalar_vec(z);
            if (std::abs(fz) <= residual_floor(zv, tau * p.drift(zv), c)) return zv;
        }
        z = next;
        fz = F(z);
    }
    if (std::isfinite(fz) && std::abs(fz) <= cfg.tolerance) return scalar_vec(z);
    const Vec zv = scalar_vec(z);
    if (std::isfinite(fz) && std::abs(fz) <= residual_floor(zv, tau * p.drift(zv), c)) return zv;
    std::ostringstream os;
    os << "BEM Newton solver did not converge after " << cfg.max_iterations
       << " iterations (residual " << std::abs(fz) << ")";
    throw SolverFailure(os.str(), std::abs(fz));
}

Vec solve_bem_vector(const SdeProblem& p, double tau, const Vec& c, const BemSolverSettings& cfg) {
    const int d = p.dim_state;
    auto F = [&](const Vec& z) -> Vec { return z - tau * p.drift(z) - c; };
    Vec z = c;
    Vec fz = F(z);
    double nf = inf_norm(fz);
    for (int it = 0; it < cfg.max_iterations && std::isfinite(nf); ++it) {
        if (nf <= cfg.tolerance) return z;
        const Mat J = Mat::Identity(d, d) - tau * p.drift_jacobian(z);
        const Vec delta = J.partialPivLu().solve(-fz);
        double lambda = 1.0;
        Vec trial = z + delta;
        Vec ft = F(trial);
        if (cfg.damping) {
            while (!(inf_norm(ft) < nf) && lambda > 1e-10) {
                lambda *= 0.5;
                trial = z + lambda * delta;
                ft = F(trial);
            }
        }
        if (inf_norm(delta) * lambda <=
                4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, inf_norm(z)) &&
            nf <= residual_floor(z, tau * p.drift(z), c)) {
            return z;
        }
        z = trial;
        fz = ft;
        nf = inf_norm(fz);
    }
    if (std::isfinite(nf) && (nf <= cfg.tolerance || nf <= residual_floor(z, tau * p.drift(z), c))) {
        return z;
    }
    std::ostringstream os;
    os << "BEM Newton solver did not converge after " << cfg.max_iterations
       << " iterations (residual " << nf << ")";
    throw SolverFailure(os.str(), nf);
}

}  // namespace

std::string_view to_string(SchemeKind k) {
    switch (k) {
        case SchemeKind::EM:
            return "em";
        case SchemeKind::TEM:
            return "tem";
        case SchemeKind::PEM:
            return "pem";
        case SchemeKind::BEM:
            return "bem";
    }
    return "unknown";
}

SchemeKind parse_scheme_kind(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (lower == "em") return SchemeKind::EM;
    if (lower == "tem") return SchemeKind::TEM;
    if (lower == "pem") return SchemeKind::PEM;
    if (lower == "bem") return SchemeKind::BEM;
    throw InvalidArgument("unknown scheme '" + std::string(s) + "' (expected em|tem|pem|bem)");
}

void SchemeSpec::validate() const {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw InvalidArgument("SchemeSpec: tau must lie in (0, 1), got " + std::to_string(tau));
    }
    if (!(bem.tolerance > 0.0) || bem.max_iterations < 1) {
        throw InvalidArgument("SchemeSpec: invalid BEM solver settings");
    }
}

double taming_denominator(double norm, double tau, double gamma) {
    if (norm == 0.0) return 1.0;
    const double log_term = std::log(tau) + 4.0 * (gamma - 1.0) * std::log(norm);
    if (norm < 1e150 && log_term < 700.0) {
        return std::pow(1.0 + tau * std::pow(norm, 4.0 * (gamma - 1.0)), 0.25);
    }
    // (1 + e^t)^(1/4) = exp((t + log1p(e^-t)) / 4)
    return std::exp(0.25 * (log_term + std::log1p(std::exp(-log_term))));
}

Vec tame_drift(const SdeProblem& problem, const Vec& x, double tau) {
    return untamed_drift(problem, x) / taming_denominator(x.norm(), tau, problem.params.gamma);
}

Mat tame_diffusion(const SdeProblem& problem, const Vec& x, double tau) {
    return problem.diffusion(x) / taming_denominator(x.norm(), tau, problem.params.gamma);
}

Vec project(const Vec& x, double tau, double gamma) {
    const double n = x.norm();
    if (n == 0.0) return Vec::Zero(x.size());
    const double radius = std::pow(tau, -1.0 / (2.0 * gamma));
    if (n <= radius) return x;
    return (radius / n) * x;
}

Vec step(const SdeProblem& problem, const SchemeSpec& scheme, const Vec& y, const Vec& dW) {
    if (dW.size() != problem.dim_noise) throw InvalidArgument("step: dW has wrong dimension");
    const double tau = scheme.tau;
    if (scheme.kind != SchemeKind::BEM) {
        const auto parts = explicit_parts(problem, scheme.kind, tau, y);
        return affine_update(parts.base, tau, parts.drift, parts.diff, dW);
    }
    const Vec c = y + problem.diffusion(y) * dW;
    if (problem.dim_state == 1) return solve_bem_scalar(problem, tau, c, scheme.bem);
    return solve_bem_vector(problem, tau, c, scheme.bem);
}

ModificationMaps modification_maps(const SdeProblem& problem, const SchemeSpec& scheme) {
    ModificationMaps m;
    const double tau = scheme.tau;
    const double gamma = problem.params.gamma;
    const SdeProblem p = problem;
    VectorField identity = [](const Vec& x) { return x; };
    switch (scheme.kind) {
        case SchemeKind::EM:
            m.projection = identity;
            m.hat_drift = [p](const Vec& x) { return p.drift(x); };
            m.hat_diffusion = [p](const Vec& x) { return p.diffusion(x); };
            break;
        case SchemeKind::TEM:
            m.projection = identity;
            m.hat_drift = [p, tau](const Vec& x) { return tame_drift(p, x, tau); };
            m.hat_diffusion = [p, tau](const Vec& x) { return tame_diffusion(p, x, tau); };
            break;
        case SchemeKind::PEM:
            m.projection = [tau, gamma](const Vec& x) { return project(x, tau, gamma); };
            m.hat_drift = [p](const Vec& x) { return p.drift(x); };
            m.hat_diffusion = [p](const Vec& x) { return p.diffusion(x); };
            break;
        case SchemeKind::BEM:
            m.projection = identity;
            m.tamed_drift = [p](const Vec& x) { return p.drift(x); };
            m.tamed_diffusion = [p](const Vec& x) { return p.diffusion(x); };
            m.g_tau = [p, tau](const Vec& x) -> Vec { return x - p.drift(x) * tau; };
            m.g_tilde_tau = identity;
            m.hat_drift = m.tamed_drift;
            m.hat_diffusion = m.tamed_diffusion;
            return m;
    }
    m.tamed_drift = [proj = m.projection, hb = m.hat_drift](const Vec& x) { return hb(proj(x)); };
    m.tamed_diffusion = [proj = m.projection, hs = m.hat_diffusion](const Vec& x) {
        return hs(proj(x));
    };
    m.g_tau = m.projection;
    m.g_tilde_tau = m.projection;
    return m;
}

std::vector<Vec> interpolate(const SdeProblem& problem, const SchemeSpec& scheme, const Vec& y0,
                             const BrownianPath& path) {
    if (path.s.size() < 2 || path.s.size() != path.w.size()) {
        throw InvalidArgument("interpolate: path must have matching s and W grids of length >= 2");
    }
    if (path.tau != scheme.tau || path.s.front() != 0.0 || path.s.back() != scheme.tau) {
        throw InvalidArgument("interpolate: path is not a refinement of a step of length tau");
    }
    if (!path.w.front().isZero(0.0) || path.w.front().size() != problem.dim_noise) {
        throw InvalidArgument("interpolate: W(0) must be the zero vector of dimension m");
    }
    if (!std::is_sorted(path.s.begin(), path.s.end())) {
        throw InvalidArgument("interpolate: substep times must be sorted");
    }
    std::vector<Vec> out;
    out.reserve(path.s.size());
    if (scheme.kind != SchemeKind::BEM) {
        const auto parts = explicit_parts(problem, scheme.kind, scheme.tau, y0);
        for (std::size_t i = 0; i < path.s.size(); ++i) {
            out.push_back(affine_update(parts.base, path.s[i], parts.drift, parts.diff, path.w[i]));
        }
        return out;
    }
    const Vec b0 = problem.drift(y0);
    const Mat s0 = problem.diffusion(y0);
    const Vec g0 = y0 - b0 * scheme.tau;
    for (std::size_t i = 0; i < path.s.size(); ++i) {
        out.push_back(affine_update(g0, path.s[i], b0, s0, path.w[i]));
    }
    return out;
}

}  // namespace ergostein
