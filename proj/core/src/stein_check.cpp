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

#include "ergostein/stein_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "ergostein/error.hpp"
#include "ergostein/noise.hpp"
#include "ergostein/parallel.hpp"

namespace ergostein {

namespace {

constexpr std::uint64_t kInnerNoise = 0x696e6e6572ULL;

struct Moments {
    double mean = 0.0;
    double se = 0.0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    const auto n = static_cast<double>(v.size());
    if (v.empty()) return m;
    double s = 0.0;
    for (double x : v) s += x;
    m.mean = s / n;
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - m.mean) * (x - m.mean);
        m.se = std::sqrt(ss / (n - 1.0) / n);
    }
    return m;
}

// Batch-means mean and standard error of a series in its natural order.
Moments batch_moments(const std::vector<double>& v, int n_batches) {
    const std::size_t N = v.size();
    const auto nb = static_cast<std::size_t>(n_batches);
    if (N < nb || nb < 2) return moments(v);
    std::vector<double> means(nb, 0.0);
    std::vector<double> counts(nb, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        const std::size_t b = i * nb / N;
        means[b] += v[i];
        counts[b] += 1.0;
    }
    for (std::size_t b = 0; b < nb; ++b) means[b] /= counts[b];
    Moments m = moments(means);
    double s = 0.0;
    for (double x : v) s += x;
    m.mean = s / static_cast<double>(N);
    return m;
}

double half_diffusion_form(const SmoothFunction& f, const Vec& z, const Mat& s) {
    double acc = 0.0;
    for (int j = 0; j < s.cols(); ++j) {
        const Vec col = s.col(j);
        acc += f.hessian_form(z, col, col);
    }
    return 0.5 * acc;
}

void require_domain(const SmoothFunction& f, const Vec& x, const char* who) {
    if (!f.in_domain(x)) {
        std::ostringstream os;
        os << who << ": point outside the domain of '" << f.name << "'";
        throw DomainEscape(os.str(), 1.0);
    }
}

struct Frozen {
    Vec y;   // g_tau(x)
    Vec bh;  // hat b at g_tilde_tau(x)
    Mat sh;  // hat sigma at g_tilde_tau(x)
    std::array<double, 4> r36{};
    double tau_gen = 0.0;
};

Frozen freeze(const SdeProblem& problem, const SchemeSpec& scheme, const ModificationMaps& maps,
              const SmoothFunction& f, const Vec& x) {
    const double tau = scheme.tau;
    Frozen fr;
    fr.y = maps.g_tau(x);
    const Vec xt = maps.g_tilde_tau(x);
    fr.bh = maps.hat_drift(xt);
    fr.sh = maps.hat_diffusion(xt);
    const Vec bx = problem.drift(x);
    const Mat sx = problem.diffusion(x);
    require_domain(f, x, "remainder terms");
    require_domain(f, fr.y, "remainder terms");
    const Vec gx = f.gradient(x);
    const Vec gy = f.gradient(fr.y);
    fr.r36[0] = (gy - gx).dot(fr.bh) * tau;
    fr.r36[1] = (half_diffusion_form(f, fr.y, fr.sh) - half_diffusion_form(f, x, fr.sh)) * tau;
    fr.r36[2] = gx.dot(fr.bh - bx) * tau;
    fr.r36[3] = (half_diffusion_form(f, x, fr.sh) - half_diffusion_form(f, x, sx)) * tau;
    fr.tau_gen = (gx.dot(bx) + half_diffusion_form(f, x, sx)) * tau;
    return fr;
}

struct Draw {
    double A = 0.0;  // f(hatY_tau) - f(y)
    double C = 0.0;  // Ito sum, mean zero
    double R1 = 0.0;
    double R2 = 0.0;
    bool escaped = false;
    bool diverged = false;
};

Draw draw(const SdeProblem& problem, const SchemeSpec& scheme, const SmoothFunction& f,
          const Frozen& fr, const Vec& x, const BrownianPath& path) {
    Draw d;
    const std::vector<Vec> Y = interpolate(problem, scheme, x, path);
    for (const Vec& z : Y) {
        if (!z.allFinite()) {
            d.diverged = true;
            return d;
        }
        if (!f.in_domain(z)) {
            d.escaped = true;
            return d;
        }
    }
    const Vec& y = Y.front();
    const Vec gy = f.gradient(y);
    const double hy = half_diffusion_form(f, y, fr.sh);
    double prev1 = 0.0;
    double prev2 = 0.0;
    Vec grad = gy;
    for (std::size_t k = 1; k < Y.size(); ++k) {
        const double ds = path.s[k] - path.s[k - 1];
        d.C += grad.dot(fr.sh * (path.w[k] - path.w[k - 1]));
        grad = f.gradient(Y[k]);
        const double g1 = (grad - gy).dot(fr.bh);
        const double g2 = half_diffusion_form(f, Y[k], fr.sh) - hy;
        d.R1 += 0.5 * ds * (prev1 + g1);
        d.R2 += 0.5 * ds * (prev2 + g2);
        prev1 = g1;
        prev2 = g2;
    }
    d.A = f(Y.back()) - f(y);
    return d;
}

std::string escape_message(std::size_t n_escaped, std::size_t n, const char* who) {
    std::ostringstream os;
    os << who << ": " << n_escaped << " of " << n << " samples left the table domain";
    return os.str();
}

}  // namespace

double generator_apply(const SdeProblem& problem, const SmoothFunction& f, const Vec& x) {
    require_domain(f, x, "generator_apply");
    return f.gradient(x).dot(problem.drift(x)) + half_diffusion_form(f, x, problem.diffusion(x));
}

DynkinReport dynkin_check(const SdeProblem& problem, const SmoothFunction& f, const Vec& x0,
                          double T, std::size_t n_traj, double tau_fine, std::uint64_t seed,
                          int workers) {
    if (!(T >= 0.0) || n_traj < 2) throw InvalidArgument("dynkin_check: need T >= 0, n_traj >= 2");
    DynkinReport rep;
    rep.n_traj = n_traj;
    if (T == 0.0) {
        rep.pass = true;
        return rep;
    }
    const SchemeSpec scheme{SchemeKind::TEM, tau_fine, {}};
    scheme.validate();
    const double ratio = T / tau_fine;
    const auto N = static_cast<std::size_t>(std::llround(ratio));
    if (N == 0 || std::abs(ratio - static_cast<double>(N)) > 1e-9 * ratio) {
        throw InvalidArgument("dynkin_check: T must be a multiple of tau_fine");
    }
    const double f0 = f(x0);
    struct PathOut {
        double lhs = 0.0;
        double rhs = 0.0;
        bool diverged = false;
    };
    const auto out = parallel_map<PathOut>(n_traj, workers, [&](std::size_t i) {
        PathOut o;
        Trajectory traj(problem, scheme, x0, N, NoiseStream{seed, i});
        double acc = 0.5 * generator_apply(problem, f, x0);
        while (traj.next()) {
            const double a = generator_apply(problem, f, traj.state());
            acc += traj.k() == N ? 0.5 * a : a;
        }
        if (traj.diverged()) {
            o.diverged = true;
            return o;
        }
        o.lhs = f(traj.state()) - f0;
        o.rhs = acc * tau_fine;
        return o;
    });
    std::vector<double> L;
    std::vector<double> Rr;
    std::vector<double> D;
    for (const auto& o : out) {
        if (o.diverged) {
            ++rep.n_diverged;
            continue;
        }
        L.push_back(o.lhs);
        Rr.push_back(o.rhs);
        D.push_back(o.lhs - o.rhs);
    }
    const Moments ml = moments(L);
    const Moments mr = moments(Rr);
    const Moments md = moments(D);
    rep.lhs = ml.mean;
    rep.lhs_stderr = ml.se;
    rep.rhs = mr.mean;
    rep.rhs_stderr = mr.se;
    rep.gap = md.mean;
    rep.combined_error = md.se;
    rep.pass = rep.n_diverged == 0 && std::abs(rep.gap) <= 3.0 * rep.combined_error;
    return rep;
}

McEstimate discrete_generator(const SdeProblem& problem, const SchemeSpec& scheme,
                              const SmoothFunction& f, const Vec& x, std::size_t n_mc,
                              std::uint64_t seed, int workers) {
    if (n_mc < 2) throw InvalidArgument("discrete_generator: n_mc must be >= 2");
    scheme.validate();
    const ModificationMaps maps = modification_maps(problem, scheme);
    const Vec y = maps.g_tau(x);
    require_domain(f, y, "discrete_generator");
    const double fy = f(y);
    const std::uint64_t inner = derive_seed(seed, kInnerNoise);
    const auto vals = parallel_map<double>(n_mc, workers, [&](std::size_t i) {
        const BrownianPath path = bridge(NoiseStream{inner, i}, 0, 1, problem.dim_noise, scheme.tau);
        const Vec end = interpolate(problem, scheme, x, path).back();
        if (!f.in_domain(end)) return std::numeric_limits<double>::quiet_NaN();
        return f(end) - fy;
    });
    std::size_t escaped = 0;
    for (double v : vals) escaped += std::isnan(v) ? 1 : 0;
    if (escaped > 0) {
        throw DomainEscape(escape_message(escaped, n_mc, "discrete_generator"),
                           static_cast<double>(escaped) / static_cast<double>(n_mc));
    }
    const Moments m = moments(vals);
    return {m.mean, m.se, n_mc};
}

std::array<double, 4> deterministic_remainders(const SdeProblem& problem,
                                               const SchemeSpec& scheme, const SmoothFunction& f,
                                               const Vec& x) {
    scheme.validate();
    return freeze(problem, scheme, modification_maps(problem, scheme), f, x).r36;
}

RemainderEstimates remainder_terms(const SdeProblem& problem, const SchemeSpec& scheme,
                                   const SmoothFunction& f, const Vec& x, std::size_t n_mc,
                                   int n_sub, std::uint64_t seed, int workers) {
    if (n_mc < 2 || n_sub < 1) throw InvalidArgument("remainder_terms: need n_mc >= 2, n_sub >= 1");
    scheme.validate();
    const ModificationMaps maps = modification_maps(problem, scheme);
    const Frozen fr = freeze(problem, scheme, maps, f, x);
    const std::uint64_t inner = derive_seed(seed, kInnerNoise);
    const auto draws = parallel_map<Draw>(n_mc, workers, [&](std::size_t i) {
        const BrownianPath path =
            bridge(NoiseStream{inner, i}, 0, n_sub, problem.dim_noise, scheme.tau);
        return draw(problem, scheme, f, fr, x, path);
    });

    RemainderEstimates est;
    est.n_mc = n_mc;
    est.n_sub = n_sub;
    std::size_t escaped = 0;
    std::vector<double> A, R1, R2, G;
    const double fixed = fr.tau_gen + fr.r36[0] + fr.r36[1] + fr.r36[2] + fr.r36[3];
    for (const auto& d : draws) {
        if (d.escaped) ++escaped;
        if (d.diverged) ++est.n_diverged;
        if (d.escaped || d.diverged) continue;
        A.push_back(d.A);
        R1.push_back(d.R1);
        R2.push_back(d.R2);
        G.push_back(d.A - d.C - d.R1 - d.R2 - fixed);
    }
    if (escaped > 0) {
        throw DomainEscape(escape_message(escaped, n_mc, "remainder_terms"),
                           static_cast<double>(escaped) / static_cast<double>(n_mc));
    }
    const Moments ma = moments(A);
    const Moments m1 = moments(R1);
    const Moments m2 = moments(R2);
    const Moments mg = moments(G);
    est.r = {m1.mean, m2.mean, fr.r36[0], fr.r36[1], fr.r36[2], fr.r36[3]};
    est.r_stderr = {m1.se, m2.se, 0.0, 0.0, 0.0, 0.0};
    est.atau_f = ma.mean;
    est.atau_stderr = ma.se;
    est.tau_generator = fr.tau_gen;
    est.identity_gap = mg.mean;
    est.identity_error = mg.se;
    // Absolute rounding floor: f values are only accurate to O(eps) in absolute
    // terms (e.g. a table that is identically zero up to noise).
    double scale = 1.0 + std::abs(f(maps.g_tau(x))) + std::abs(ma.mean) + std::abs(fr.tau_gen);
    for (double r : est.r) scale += std::abs(r);
    est.identity_floor = 64.0 * std::numeric_limits<double>::epsilon() * scale;
    est.identity_pass =
        est.n_diverged == 0 && std::abs(mg.mean) <= 3.0 * mg.se + est.identity_floor;
    return est;
}

RepresentationReport error_representation_check(const SdeProblem& problem,
                                                 const SchemeSpec& scheme,
                                                 const SmoothFunction& phi,
                                                 const StationaryDensity1d& density,
                                                 const SteinSolution1d& solution,
                                                 const RepresentationSettings& settings) {
    if (problem.dim_state != 1 || problem.dim_noise != 1) {
        throw InvalidArgument("error_representation_check: problem must have d = m = 1");
    }
    if (settings.n_samples < 2 * static_cast<std::size_t>(settings.n_batches) ||
        settings.n_sub < 1) {
        throw InvalidArgument("error_representation_check: too few samples or n_sub < 1");
    }
    if (density.size() != solution.grid.size()) {
        throw InvalidArgument("error_representation_check: density and table grids differ");
    }
    scheme.validate();
    const double tau = scheme.tau;
    const std::size_t burn_in =
        settings.burn_in > 0
            ? settings.burn_in
            : std::min<std::size_t>(1000000, static_cast<std::size_t>(std::ceil(20.0 / tau)));
    const std::size_t stride = settings.stride > 0
                                   ? settings.stride
                                   : static_cast<std::size_t>(std::ceil(1.0 / tau));
    const std::size_t n_steps = burn_in + settings.n_samples * stride;

    RepresentationReport rep;
    rep.tau = tau;
    rep.pi_phi = solution.pi_phi;
    rep.chain_steps = n_steps;
    rep.n_mc = settings.n_samples;

    // One long chain: per-stride averages of phi plus the retained samples.
    std::vector<Vec> samples;
    samples.reserve(settings.n_samples);
    std::vector<double> stride_means;
    stride_means.reserve(settings.n_samples);
    Trajectory traj(problem, scheme, scalar_vec(settings.x0), n_steps,
                    NoiseStream{settings.seed, 0});
    double acc = 0.0;
    while (traj.next()) {
        if (traj.k() <= burn_in) continue;
        acc += phi(traj.state());
        if ((traj.k() - burn_in) % stride == 0) {
            stride_means.push_back(acc / static_cast<double>(stride));
            samples.push_back(traj.state());
            acc = 0.0;
        }
    }
    if (traj.diverged()) {
        rep.verdict = "fail";
        rep.lhs = rep.rhs = std::numeric_limits<double>::quiet_NaN();
        return rep;
    }
    const Moments mphi = batch_moments(stride_means, settings.n_batches);
    rep.pi_tau_estimate = mphi.mean;
    rep.lhs = std::abs(mphi.mean - solution.pi_phi);
    rep.lhs_stderr = mphi.se;
    const std::size_t half = stride_means.size() / 2;
    const std::vector<double> first(stride_means.begin(), stride_means.begin() + static_cast<std::ptrdiff_t>(half));
    const std::vector<double> second(stride_means.begin() + static_cast<std::ptrdiff_t>(half), stride_means.end());
    const Moments h1 = batch_moments(first, settings.n_batches / 2);
    const Moments h2 = batch_moments(second, settings.n_batches / 2);
    rep.equilibration_gap = h1.mean - h2.mean;

    const SmoothFunction f = solution.as_function("f_phi");
    const ModificationMaps maps = modification_maps(problem, scheme);
    const std::uint64_t inner = derive_seed(settings.seed, kInnerNoise);
    struct Row {
        double total = 0.0;
        double atau = 0.0;
        std::array<double, 6> r{};
        bool escaped = false;
        bool diverged = false;
    };
    const auto rows = parallel_map<Row>(samples.size(), settings.workers, [&](std::size_t i) {
        Row row;
        const Vec& x = samples[i];
        if (!f.in_domain(x) || !f.in_domain(maps.g_tau(x))) {
            row.escaped = true;
            return row;
        }
        const Frozen fr = freeze(problem, scheme, maps, f, x);
        const BrownianPath path =
            bridge(NoiseStream{inner, i}, 0, settings.n_sub, problem.dim_noise, tau);
        const Draw d = draw(problem, scheme, f, fr, x, path);
        row.escaped = d.escaped;
        row.diverged = d.diverged;
        const double a = settings.ito_control ? d.A - d.C : d.A;
        row.atau = a / tau;
        row.r = {d.R1 / tau, d.R2 / tau, fr.r36[0] / tau, fr.r36[1] / tau, fr.r36[2] / tau,
                 fr.r36[3] / tau};
        double sum_r = 0.0;
        for (double v : row.r) sum_r += v;
        row.total = row.atau - sum_r;
        return row;
    });
    std::size_t escaped = 0;
    std::vector<double> totals;
    std::vector<double> ataus;
    std::array<std::vector<double>, 6> rs;
    for (const auto& row : rows) {
        if (row.escaped || row.diverged) {
            ++escaped;
            continue;
        }
        totals.push_back(row.total);
        ataus.push_back(row.atau);
        for (std::size_t k = 0; k < 6; ++k) rs[k].push_back(row.r[k]);
    }
    if (escaped > 0) {
        throw DomainEscape(escape_message(escaped, samples.size(), "error_representation_check"),
                           static_cast<double>(escaped) / static_cast<double>(samples.size()));
    }
    // The identity reads A_tau f(gX0) - sum R_i = tau (phi(X0) - pi(phi)), so
    // the mean of the totals estimates pi_tau(phi) - pi(phi).
    const Moments mt = batch_moments(totals, settings.n_batches);
    const Moments ma = batch_moments(ataus, settings.n_batches);
    rep.rhs = std::abs(mt.mean);
    rep.rhs_stderr = mt.se;
    rep.atau_term = ma.mean;
    rep.atau_term_stderr = ma.se;
    for (std::size_t k = 0; k < 6; ++k) rep.r_mean[k] = batch_moments(rs[k], settings.n_batches).mean;
    // pi(phi) enters the LHS, so its quadrature error (floored at rounding) does too.
    rep.oracle_error = pi_estimate(density, phi).error_estimate +
                       16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(solution.pi_phi));
    rep.combined_error = std::hypot(rep.lhs_stderr, rep.rhs_stderr) + rep.oracle_error;
    if (std::abs(rep.equilibration_gap) > 4.0 * std::hypot(h1.se, h2.se) && h1.se + h2.se > 0.0) {
        rep.verdict = "inconclusive";
    } else {
        rep.verdict = std::abs(rep.lhs - rep.rhs) <= 3.0 * rep.combined_error ? "pass" : "fail";
    }
    return rep;
}

}  // namespace ergostein
