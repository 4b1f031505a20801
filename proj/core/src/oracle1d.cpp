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

#include "ergostein/oracle1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "ergostein/ergodic.hpp"
#include "ergostein/error.hpp"
#include "ergostein/noise.hpp"
#include "ergostein/parallel.hpp"
#include "ergostein/quadrature.hpp"

namespace ergostein {

namespace {

constexpr double kTailTarget = 1e-12;
constexpr double kPiTarget = 1e-9;
// Sub-cells are used where the log density moves by more than this per cell.
constexpr double kMaxLogStep = 0.1;

struct Coef {
    double b, b1, b2;
    double s, s1, s2;

    double lp() const { return 2.0 * b / (s * s) - 2.0 * s1 / s; }
    double lpp() const {
        return 2.0 * b1 / (s * s) - 4.0 * b * s1 / (s * s * s) - 2.0 * s2 / s +
               2.0 * s1 * s1 / (s * s);
    }
};

Coef coef_at(const SdeProblem& p, double x) {
    const Vec X = scalar_vec(x);
    const std::array<Vec, 2> e{scalar_vec(1.0), scalar_vec(1.0)};
    const std::span<const Vec> e1(e.data(), 1);
    const std::span<const Vec> e2(e.data(), 2);
    Coef c{};
    c.b = p.drift(X)(0);
    c.b1 = p.drift_deriv[0](X, e1)(0);
    c.b2 = p.drift_deriv[1](X, e2)(0);
    c.s = p.diffusion(X)(0, 0);
    c.s1 = p.diffusion_deriv[0](X, e1)(0, 0);
    c.s2 = p.diffusion_deriv[1](X, e2)(0, 0);
    return c;
}

double log_slope(const SdeProblem& p, double x) {
    const Vec X = scalar_vec(x);
    const Vec e = scalar_vec(1.0);
    const double b = p.drift(X)(0);
    const double s = p.diffusion(X)(0, 0);
    const double s1 = p.diffusion_deriv[0](X, std::span<const Vec>(&e, 1))(0, 0);
    return 2.0 * b / (s * s) - 2.0 * s1 / s;
}

struct Jet {
    double v, d, s;
};

Jet phi_jet(const SmoothFunction& phi, double x) {
    const Vec X = scalar_vec(x);
    const std::array<Vec, 2> e{scalar_vec(1.0), scalar_vec(1.0)};
    return {phi(X), phi.derivative(X, std::span<const Vec>(e.data(), 1)),
            phi.derivative(X, std::span<const Vec>(e.data(), 2))};
}

void require_scalar(const SdeProblem& p, const char* who) {
    if (p.dim_state != 1 || p.dim_noise != 1) {
        throw InvalidArgument(std::string(who) + ": problem must have d = m = 1");
    }
}

// Change of log p across [x0, x1] (signed), by Gauss-Legendre on (log p)'.
double log_increment(const SdeProblem& p, double x0, double x1) {
    return gauss_legendre([&](double y) { return log_slope(p, y); }, x0, x1);
}

// Right-tail bound int_R^inf p for a log-concave tail, given the normalized
// log density and slope at the boundary. dir = +1 for the right tail.
double tail_bound(const SdeProblem& p, double R, double log_p_at_R, int dir) {
    double prev = dir * log_slope(p, dir * R);
    if (!(prev < 0.0)) return std::numeric_limits<double>::infinity();
    const double slope_R = prev;
    for (int j = 1; j <= 24; ++j) {
        const double x = dir * R * (1.0 + j / 8.0);
        const double cur = dir * log_slope(p, x);
        if (!std::isfinite(cur) || cur > prev * (1.0 - 1e-12) + 1e-300) {
            return std::numeric_limits<double>::infinity();
        }
        prev = cur;
    }
    return std::exp(log_p_at_R) / -slope_R;
}

double hermite_sum(const std::vector<double>& g, const std::vector<double>& d,
                   const std::vector<double>& s, double h, std::size_t stride) {
    double total = 0.0;
    const double H = h * static_cast<double>(stride);
    for (std::size_t i = 0; i + stride < g.size(); i += stride) {
        total += hermite_cell(H, g[i], d[i], s[i], g[i + stride], d[i + stride], s[i + stride]);
    }
    return total;
}

}  // namespace

double StationaryDensity1d::pdf(std::size_t i) const { return std::exp(log_density.at(i)); }

double StationaryDensity1d::mass() const {
    std::vector<double> g(size()), d(size()), s(size());
    for (std::size_t i = 0; i < size(); ++i) {
        g[i] = std::exp(log_density[i]);
        d[i] = dlog[i] * g[i];
        s[i] = (d2log[i] + dlog[i] * dlog[i]) * g[i];
    }
    return hermite_sum(g, d, s, h, 1);
}

std::size_t StationaryDensity1d::mode_index() const {
    return static_cast<std::size_t>(
        std::max_element(log_density.begin(), log_density.end()) - log_density.begin());
}

StationaryDensity1d stationary_density(const SdeProblem& problem, double R, int n_grid) {
    require_scalar(problem, "stationary_density");
    if (!(R > 0.0)) throw InvalidArgument("stationary_density: R must be > 0");
    if (n_grid < 33 || n_grid % 2 == 0) {
        throw InvalidArgument("stationary_density: n_grid must be odd and >= 33");
    }
    const auto n = static_cast<std::size_t>(n_grid);
    const std::size_t c = n / 2;
    StationaryDensity1d d;
    d.R = R;
    d.h = 2.0 * R / static_cast<double>(n - 1);
    d.grid.resize(n);
    d.log_density.resize(n);
    d.dlog.resize(n);
    d.d2log.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        d.grid[i] = i == c ? 0.0 : -R + static_cast<double>(i) * d.h;
    }
    d.grid.back() = R;
    double smin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const Coef k = coef_at(problem, d.grid[i]);
        if (!std::isfinite(k.s) || !std::isfinite(k.b)) {
            std::ostringstream os;
            os << "stationary_density: non-finite coefficient at x = " << d.grid[i];
            throw NonFiniteValue(os.str());
        }
        smin = std::min(smin, k.s * k.s);
        d.dlog[i] = k.lp();
        d.d2log[i] = k.lpp();
    }
    if (!(smin > 1e-24)) {
        throw Error("stationary_density: sigma^2 vanishes on the grid (degenerate noise)");
    }
    d.log_density[c] = -std::log(std::abs(coef_at(problem, 0.0).s)) * 2.0;
    for (std::size_t i = c; i + 1 < n; ++i) {
        d.log_density[i + 1] = d.log_density[i] + log_increment(problem, d.grid[i], d.grid[i + 1]);
    }
    for (std::size_t i = c; i > 0; --i) {
        d.log_density[i - 1] = d.log_density[i] + log_increment(problem, d.grid[i], d.grid[i - 1]);
    }
    const double lmax = *std::max_element(d.log_density.begin(), d.log_density.end());
    std::vector<double> g(n), gd(n), gs(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = std::exp(d.log_density[i] - lmax);
        gd[i] = d.dlog[i] * g[i];
        gs[i] = (d.d2log[i] + d.dlog[i] * d.dlog[i]) * g[i];
    }
    d.log_normalizer = lmax + std::log(hermite_sum(g, gd, gs, d.h, 1));
    for (double& v : d.log_density) v -= d.log_normalizer;
    d.tail_mass_bound = tail_bound(problem, R, d.log_density.back(), +1) +
                        tail_bound(problem, R, d.log_density.front(), -1);
    if (!(d.tail_mass_bound < kTailTarget)) {
        std::ostringstream os;
        os << "stationary_density: tail mass bound " << d.tail_mass_bound
           << " is not below 1e-12 at R = " << R << "; use a larger R";
        throw Error(os.str());
    }
    return d;
}

StationaryDensity1d stationary_density(const SdeProblem& problem, int n_grid) {
    std::string last;
    for (double R : {8.0, 12.0, 16.0, 24.0}) {
        try {
            return stationary_density(problem, R, n_grid);
        } catch (const InvalidArgument&) {
            throw;
        } catch (const NonFiniteValue&) {
            throw;
        } catch (const Error& e) {
            last = e.what();
        }
    }
    throw Error("stationary_density: no R in {8, 12, 16, 24} certifies the tail (" + last + ")");
}

PiEstimate pi_estimate(const StationaryDensity1d& density, const SmoothFunction& phi) {
    const std::size_t n = density.size();
    std::vector<double> g(n), gd(n), gs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Jet j = phi_jet(phi, density.grid[i]);
        const double p = std::exp(density.log_density[i]);
        const double p1 = density.dlog[i] * p;
        const double p2 = (density.d2log[i] + density.dlog[i] * density.dlog[i]) * p;
        g[i] = j.v * p;
        gd[i] = j.d * p + j.v * p1;
        gs[i] = j.s * p + 2.0 * j.d * p1 + j.v * p2;
    }
    PiEstimate est;
    est.value = hermite_sum(g, gd, gs, density.h, 1);
    const double coarse = hermite_sum(g, gd, gs, density.h, 2);
    const double edge = std::max(std::abs(phi(scalar_vec(density.R))),
                                 std::abs(phi(scalar_vec(-density.R))));
    est.error_estimate = std::abs(est.value - coarse) + edge * density.tail_mass_bound;
    if (!std::isfinite(est.value) || !(est.error_estimate < kPiTarget)) {
        std::ostringstream os;
        os << "pi_of: quadrature error estimate " << est.error_estimate << " for '" << phi.name
           << "' is not below 1e-9 (growth incompatible with the density tails?)";
        throw Error(os.str());
    }
    return est;
}

double pi_of(const StationaryDensity1d& density, const SmoothFunction& phi) {
    return pi_estimate(density, phi).value;
}

struct SteinSolution1d::Context {
    std::vector<double> grid, f, f1, f2, f3, f4;
    double R = 0.0;
    double h = 0.0;
};

namespace {

struct Walker {
    const SdeProblem& problem;
    const SmoothFunction& phi;
    double pi;

    // Propagates J' = psi - L' J from (x0, J0) to x1, where L = log p.
    double propagate(double x0, double x1, double J0) const {
        const double w = x1 - x0;
        const double slope = std::max(std::abs(log_slope(problem, x0)),
                                      std::abs(log_slope(problem, x1)));
        const int sub = std::max(1, static_cast<int>(std::ceil(std::abs(w) * slope / kMaxLogStep)));
        double J = J0;
        for (int k = 0; k < sub; ++k) {
            const double u0 = x0 + w * k / sub;
            const double u1 = k + 1 == sub ? x1 : x0 + w * (k + 1) / sub;
            const double dL = log_increment(problem, u0, u1);
            const double e0 = std::exp(-dL);
            const Coef c0 = coef_at(problem, u0);
            const Coef c1 = coef_at(problem, u1);
            const Jet p0 = phi_jet(phi, u0);
            const Jet p1 = phi_jet(phi, u1);
            auto jet = [&](const Coef& c, const Jet& q, double e, double out[3]) {
                const double psi = q.v - pi;
                const double lp = c.lp();
                out[0] = psi * e;
                out[1] = (q.d + psi * lp) * e;
                out[2] = (q.s + 2.0 * q.d * lp + psi * (c.lpp() + lp * lp)) * e;
            };
            double g0[3];
            double g1[3];
            jet(c0, p0, e0, g0);
            jet(c1, p1, 1.0, g1);
            J = J * e0 + hermite_cell(u1 - u0, g0[0], g0[1], g0[2], g1[0], g1[1], g1[2]);
        }
        return J;
    }

    // J at the boundary point xb from far-field start; dir = -1 for the left end.
    double boundary_value(double xb, double h, int dir) const {
        const double inward = -dir * log_slope(problem, xb);
        double extent = std::abs(xb);
        if (inward > 0.0) extent = std::clamp(40.0 / inward, 10.0 * h, std::abs(xb));
        const int cells = std::max(1, static_cast<int>(std::ceil(extent / h)));
        double J = 0.0;
        for (int k = cells; k > 0; --k) {
            const double a = xb + dir * extent * k / cells;
            const double b = xb + dir * extent * (k - 1) / cells;
            J = propagate(a, k == 1 ? xb : b, J);
        }
        return J;
    }
};

constexpr std::array<double, 5> kD1{0.0, 4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
constexpr std::array<double, 5> kD2{-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0,
                                    -1.0 / 560.0};

}  // namespace

double stein_residual_fd(const SdeProblem& problem, const std::vector<double>& grid,
                         const std::vector<double>& f, const SmoothFunction& phi, double pi_phi,
                         std::size_t first, std::size_t last) {
    require_scalar(problem, "stein_residual_fd");
    if (grid.size() != f.size() || grid.size() < 9) {
        throw InvalidArgument("stein_residual_fd: grid and f must match and have >= 9 nodes");
    }
    const double h = grid[1] - grid[0];
    first = std::max<std::size_t>(first, 4);
    last = std::min(last, grid.size() - 5);
    double sup = 0.0;
    for (std::size_t i = first; i <= last; ++i) {
        double d1 = 0.0;
        double d2 = kD2[0] * f[i];
        for (std::size_t k = 1; k <= 4; ++k) {
            d1 += kD1[k] * (f[i + k] - f[i - k]);
            d2 += kD2[k] * (f[i + k] + f[i - k]);
        }
        d1 /= h;
        d2 /= h * h;
        const Coef c = coef_at(problem, grid[i]);
        const double r = c.b * d1 + 0.5 * c.s * c.s * d2 - (phi(scalar_vec(grid[i])) - pi_phi);
        sup = std::max(sup, std::abs(r));
        if (std::isnan(r)) return r;
    }
    return sup;
}

SteinSolution1d stein_solution(const SdeProblem& problem, const StationaryDensity1d& density,
                               const SmoothFunction& phi, const SteinSettings& settings) {
    require_scalar(problem, "stein_solution");
    const std::size_t n = density.size();
    const double h = density.h;
    const double pi = pi_of(density, phi);
    const Walker walk{problem, phi, pi};

    std::vector<double> J(n);
    const std::size_t mode = density.mode_index();
    J[0] = walk.boundary_value(density.grid[0], h, -1);
    for (std::size_t i = 0; i < mode; ++i) J[i + 1] = walk.propagate(density.grid[i], density.grid[i + 1], J[i]);
    J[n - 1] = walk.boundary_value(density.grid[n - 1], h, +1);
    for (std::size_t i = n - 1; i > mode + 1; --i) {
        J[i - 1] = walk.propagate(density.grid[i], density.grid[i - 1], J[i]);
    }

    SteinSolution1d sol;
    sol.grid = density.grid;
    sol.R = density.R;
    sol.h = h;
    sol.pi_phi = pi;
    sol.f.assign(n, 0.0);
    sol.f1.resize(n);
    sol.f2.resize(n);
    sol.f3.resize(n);
    sol.f4.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Coef c = coef_at(problem, density.grid[i]);
        const Jet q = phi_jet(phi, density.grid[i]);
        const double s2 = c.s * c.s;
        const double a = 2.0 / s2;
        const double a1 = -4.0 * c.s1 / (s2 * c.s);
        const double a2 = -4.0 * c.s2 / (s2 * c.s) + 12.0 * c.s1 * c.s1 / (s2 * s2);
        const double f1 = a * J[i];
        const double u = q.v - pi - c.b * f1;
        const double f2 = a * u;
        const double u1 = q.d - c.b1 * f1 - c.b * f2;
        const double f3 = a1 * u + a * u1;
        const double u2 = q.s - c.b2 * f1 - 2.0 * c.b1 * f2 - c.b * f3;
        sol.f1[i] = f1;
        sol.f2[i] = f2;
        sol.f3[i] = f3;
        sol.f4[i] = a2 * u + 2.0 * a1 * u1 + a * u2;
    }
    const std::size_t c = n / 2;
    for (std::size_t i = c; i + 1 < n; ++i) {
        sol.f[i + 1] = sol.f[i] + hermite_cell(h, sol.f1[i], sol.f2[i], sol.f3[i], sol.f1[i + 1],
                                               sol.f2[i + 1], sol.f3[i + 1]);
    }
    for (std::size_t i = c; i > 0; --i) {
        sol.f[i - 1] = sol.f[i] - hermite_cell(h, sol.f1[i - 1], sol.f2[i - 1], sol.f3[i - 1],
                                               sol.f1[i], sol.f2[i], sol.f3[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(sol.f[i]) || !std::isfinite(sol.f4[i])) {
            std::ostringstream os;
            os << "stein_solution: non-finite table entry at x = " << density.grid[i];
            throw NonFiniteValue(os.str());
        }
    }

    std::vector<double> g(n), gd(n), gs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = std::exp(density.log_density[i]);
        const double p1 = density.dlog[i] * p;
        const double p2 = (density.d2log[i] + density.dlog[i] * density.dlog[i]) * p;
        g[i] = sol.f[i] * p;
        gd[i] = sol.f1[i] * p + sol.f[i] * p1;
        gs[i] = sol.f2[i] * p + 2.0 * sol.f1[i] * p1 + sol.f[i] * p2;
    }
    sol.gauge_constant = hermite_sum(g, gd, gs, h, 1);
    sol.residual_sup = stein_residual_fd(problem, sol.grid, sol.f, phi, pi);

    auto ctx = std::make_shared<SteinSolution1d::Context>();
    ctx->grid = sol.grid;
    ctx->f = sol.f;
    ctx->f1 = sol.f1;
    ctx->f2 = sol.f2;
    ctx->f3 = sol.f3;
    ctx->f4 = sol.f4;
    ctx->R = sol.R;
    ctx->h = h;
    sol.ctx = std::move(ctx);

    if (!(sol.residual_sup < settings.residual_tolerance)) {
        std::ostringstream os;
        os << "stein_solution: residual " << sol.residual_sup << " is not below "
           << settings.residual_tolerance << " for '" << phi.name << "'; refine n_grid";
        throw Error(os.str());
    }
    return sol;
}

namespace {

double eval_table(const SteinSolution1d::Context& c, double x, int order) {
    if (!(std::abs(x) <= c.R * (1.0 + 1e-12))) {
        std::ostringstream os;
        os << "Stein table evaluated at x = " << x << " outside [-" << c.R << ", " << c.R << "]";
        throw DomainEscape(os.str(), 1.0);
    }
    const std::size_t n = c.grid.size();
    auto i = static_cast<std::size_t>(std::clamp((x + c.R) / c.h, 0.0, static_cast<double>(n - 2)));
    i = std::min(i, n - 2);
    const double t = x - c.grid[i];
    const std::size_t j = i + 1;
    switch (order) {
        case 0:
            return quintic_hermite(c.h, t, c.f[i], c.f1[i], c.f2[i], c.f[j], c.f1[j], c.f2[j]);
        case 1:
            return quintic_hermite(c.h, t, c.f1[i], c.f2[i], c.f3[i], c.f1[j], c.f2[j], c.f3[j]);
        case 2:
            return quintic_hermite(c.h, t, c.f2[i], c.f3[i], c.f4[i], c.f2[j], c.f3[j], c.f4[j]);
        case 3: {
            const double u = t / c.h;
            const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
            const double h10 = u * (1 - u) * (1 - u);
            const double h01 = u * u * (3 - 2 * u);
            const double h11 = u * u * (u - 1);
            return h00 * c.f3[i] + c.h * h10 * c.f4[i] + h01 * c.f3[j] + c.h * h11 * c.f4[j];
        }
        case 4: {
            const double u = t / c.h;
            return (1 - u) * c.f4[i] + u * c.f4[j];
        }
        default:
            throw InvalidArgument("SteinSolution1d::eval: order must lie in 0..4");
    }
}

}  // namespace

double SteinSolution1d::eval(double x, int order) const {
    if (!ctx) throw InvalidArgument("SteinSolution1d::eval: empty table");
    return eval_table(*ctx, x, order);
}

SmoothFunction SteinSolution1d::as_function(const std::string& name) const {
    if (!ctx) throw InvalidArgument("SteinSolution1d::as_function: empty table");
    SmoothFunction fn;
    fn.name = name;
    fn.dim = 1;
    auto c = ctx;
    fn.value = [c](const Vec& x) { return eval_table(*c, x(0), 0); };
    for (int k = 0; k < 4; ++k) {
        fn.deriv[static_cast<std::size_t>(k)] = [c, k](const Vec& x, std::span<const Vec> dirs) {
            double scale = 1.0;
            for (const Vec& d : dirs) scale *= d(0);
            return eval_table(*c, x(0), k + 1) * scale;
        };
    }
    double bound = 0.0;
    for (const auto* tab : {&f1, &f2, &f3, &f4}) {
        double m = 0.0;
        for (double v : *tab) m = std::max(m, std::abs(v));
        bound += m;
    }
    fn.seminorm_bound = bound;
    Box box;
    box.lo = scalar_vec(-R);
    box.hi = scalar_vec(R);
    fn.domain = box;
    return fn;
}

SemigroupReport verify_semigroup_route(const SdeProblem& problem, const SmoothFunction& phi,
                                       const SteinSolution1d& solution,
                                       const SemigroupSettings& settings) {
    require_scalar(problem, "verify_semigroup_route");
    if (settings.probes.empty() || settings.n_traj < 2 || settings.n_times < 2) {
        throw InvalidArgument("verify_semigroup_route: need probes, n_traj >= 2, n_times >= 2");
    }
    const SchemeSpec scheme{settings.kind, settings.tau_fine, {}};
    scheme.validate();
    const double ratio = settings.T_max / settings.tau_fine;
    const auto N = static_cast<std::size_t>(std::llround(ratio));
    if (N == 0 || std::abs(ratio - static_cast<double>(N)) > 1e-9 * ratio) {
        throw InvalidArgument("verify_semigroup_route: T_max must be a positive multiple of tau_fine");
    }
    const auto nt = static_cast<std::size_t>(settings.n_times);
    std::vector<std::size_t> marks(nt);
    for (std::size_t j = 0; j < nt; ++j) {
        marks[j] = static_cast<std::size_t>(
            std::llround(static_cast<double>(j + 1) * static_cast<double>(N) / static_cast<double>(nt)));
    }
    const double pi = solution.pi_phi;
    const std::size_t np = settings.probes.size();
    const std::size_t total = np * settings.n_traj;

    struct PathOut {
        double integral = 0.0;
        std::vector<double> at_marks;
    };
    const auto paths = parallel_map<PathOut>(total, settings.workers, [&](std::size_t id) {
        PathOut out;
        out.at_marks.assign(nt, 0.0);
        const double x0 = settings.probes[id / settings.n_traj];
        Trajectory traj(problem, scheme, scalar_vec(x0), N, NoiseStream{settings.seed, id});
        double acc = 0.5 * (phi(traj.state()) - pi);
        std::size_t j = 0;
        while (traj.next()) {
            const double v = phi(traj.state()) - pi;
            acc += traj.k() == N ? 0.5 * v : v;
            if (j < nt && marks[j] == traj.k()) out.at_marks[j++] = v;
        }
        if (traj.diverged()) {
            throw Error("verify_semigroup_route: a fine-step path diverged");
        }
        out.integral = -acc * settings.tau_fine;
        return out;
    });

    SemigroupReport rep;
    std::vector<std::vector<double>> mean_t(np, std::vector<double>(nt, 0.0));
    std::vector<std::vector<double>> se_t(np, std::vector<double>(nt, 0.0));
    const double M = static_cast<double>(settings.n_traj);
    for (std::size_t p = 0; p < np; ++p) {
        SemigroupProbe pr;
        pr.x = settings.probes[p];
        double s = 0.0;
        for (std::size_t i = 0; i < settings.n_traj; ++i) s += paths[p * settings.n_traj + i].integral;
        pr.mc_integral = s / M;
        double ss = 0.0;
        for (std::size_t i = 0; i < settings.n_traj; ++i) {
            const double d = paths[p * settings.n_traj + i].integral - pr.mc_integral;
            ss += d * d;
        }
        pr.mc_stderr = std::sqrt(ss / (M - 1.0) / M);
        for (std::size_t j = 0; j < nt; ++j) {
            double a = 0.0;
            for (std::size_t i = 0; i < settings.n_traj; ++i) a += paths[p * settings.n_traj + i].at_marks[j];
            const double m = a / M;
            double q = 0.0;
            for (std::size_t i = 0; i < settings.n_traj; ++i) {
                const double d = paths[p * settings.n_traj + i].at_marks[j] - m;
                q += d * d;
            }
            mean_t[p][j] = m;
            se_t[p][j] = std::sqrt(q / (M - 1.0) / M);
        }
        pr.table_value = solution.eval(pr.x) - solution.gauge_constant;
        rep.probes.push_back(pr);
    }

    // Pooled slope of log|P_t phi - pi| with one intercept per probe.
    double sxx = 0.0;
    double sxy = 0.0;
    bool all_zero = true;
    for (std::size_t p = 0; p < np; ++p) {
        std::vector<double> ts;
        std::vector<double> ys;
        for (std::size_t j = 0; j < nt; ++j) {
            if (mean_t[p][j] != 0.0 || se_t[p][j] != 0.0) all_zero = false;
            if (std::abs(mean_t[p][j]) > 3.0 * se_t[p][j] && mean_t[p][j] != 0.0) {
                ts.push_back(static_cast<double>(marks[j]) * settings.tau_fine);
                ys.push_back(std::log(std::abs(mean_t[p][j])));
            }
        }
        if (ts.size() < 2) continue;
        double tm = 0.0;
        double ym = 0.0;
        for (std::size_t k = 0; k < ts.size(); ++k) {
            tm += ts[k];
            ym += ys[k];
        }
        tm /= static_cast<double>(ts.size());
        ym /= static_cast<double>(ts.size());
        for (std::size_t k = 0; k < ts.size(); ++k) {
            sxx += (ts[k] - tm) * (ts[k] - tm);
            sxy += (ts[k] - tm) * (ys[k] - ym);
        }
        rep.fit_points += static_cast<int>(ts.size());
    }

    if (all_zero) {
        rep.lambda_fit = 0.0;
        for (auto& pr : rep.probes) {
            pr.tail_bound = 0.0;
            pr.gap = pr.mc_integral - pr.table_value;
            pr.pass = std::abs(pr.gap) <= 3.0 * pr.mc_stderr;
        }
    } else {
        rep.lambda_fit = sxx > 0.0 ? -sxy / sxx : 0.0;
        if (rep.fit_points < 3 || !(rep.lambda_fit > 0.0)) {
            rep.status = "inconclusive";
            rep.note = "decay fit too poor to bound the tail beyond T_max";
            for (auto& pr : rep.probes) {
                pr.tail_bound = std::numeric_limits<double>::infinity();
                pr.gap = pr.mc_integral - pr.table_value;
            }
            return rep;
        }
        for (std::size_t p = 0; p < np; ++p) {
            auto& pr = rep.probes[p];
            const double last = std::max(std::abs(mean_t[p][nt - 1]), 3.0 * se_t[p][nt - 1]);
            pr.tail_bound = last / rep.lambda_fit;
            pr.gap = pr.mc_integral - pr.table_value;
            pr.pass = std::abs(pr.gap) <= 3.0 * (pr.mc_stderr + pr.tail_bound);
        }
    }
    const bool ok = std::all_of(rep.probes.begin(), rep.probes.end(),
                                [](const SemigroupProbe& p) { return p.pass; });
    rep.status = ok ? "pass" : "fail";
    return rep;
}

std::array<GrowthExponent, 4> derivative_growth_fit(const SteinSolution1d& solution) {
    std::array<GrowthExponent, 4> out;
    const std::array<const std::vector<double>*, 4> tabs{&solution.f1, &solution.f2, &solution.f3,
                                                         &solution.f4};
    for (int k = 0; k < 4; ++k) {
        auto& g = out[static_cast<std::size_t>(k)];
        g.order = k + 1;
        std::vector<double> xs;
        std::vector<double> ys;
        const auto& tab = *tabs[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < solution.grid.size(); ++i) {
            const double x = solution.grid[i];
            if (std::abs(x) < 0.5 * solution.R || !(std::abs(tab[i]) > 1e-10)) continue;
            xs.push_back(std::log1p(std::abs(x)));
            ys.push_back(std::log(std::abs(tab[i])));
        }
        if (xs.size() < 3) {
            g.skipped = true;
            continue;
        }
        const double n = static_cast<double>(xs.size());
        double xm = 0.0;
        double ym = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            xm += xs[i];
            ym += ys[i];
        }
        xm /= n;
        ym /= n;
        double sxx = 0.0;
        double sxy = 0.0;
        double syy = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxx += (xs[i] - xm) * (xs[i] - xm);
            sxy += (xs[i] - xm) * (ys[i] - ym);
            syy += (ys[i] - ym) * (ys[i] - ym);
        }
        g.exponent = sxy / sxx;
        g.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    }
    return out;
}

void write_table_csv(std::ostream& os, const StationaryDensity1d& density,
                     const SteinSolution1d& solution) {
    if (density.size() != solution.grid.size()) {
        throw InvalidArgument("write_table_csv: density and solution grids differ");
    }
    os << "x,p,f,f1,f2,f3,f4\n";
    os.precision(17);
    for (std::size_t i = 0; i < density.size(); ++i) {
        os << density.grid[i] << ',' << density.pdf(i) << ',' << solution.f[i] << ','
           << solution.f1[i] << ',' << solution.f2[i] << ',' << solution.f3[i] << ','
           << solution.f4[i] << '\n';
    }
}

}  // namespace ergostein
