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

// Acceptance suite: one PASS/FAIL line per criterion, details indented below.

#include <CLI11.hpp>

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "ergostein/converge.hpp"
#include "ergostein/ergodic.hpp"
#include "ergostein/noise.hpp"
#include "ergostein/oracle1d.hpp"
#include "ergostein/schemes.hpp"
#include "ergostein/stein_check.hpp"

using namespace ergostein;

namespace {

constexpr std::uint64_t kSeed = 20260101;
int g_workers = 1;

Vec v1(double x) { return Vec::Constant(1, x); }

SchemeSpec spec(SchemeKind k, double tau) {
    SchemeSpec s;
    s.kind = k;
    s.tau = tau;
    return s;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void detail(const char* fmt, auto... args) {
    std::printf("  ");
    std::printf(fmt, args...);
    std::printf("\n");
    std::fflush(stdout);
}

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

struct Oracle {
    SdeProblem problem;
    SmoothFunction phi;
    StationaryDensity1d density;
    SteinSolution1d solution;
};

Oracle build_oracle(const std::string& problem, const std::string& phi) {
    Oracle o;
    o.problem = gallery_problem(problem);
    o.phi = named_test_function(phi);
    o.density = stationary_density(o.problem);
    o.solution = stein_solution(o.problem, o.density, o.phi);
    return o;
}

// Generator residual from 8th-order central differences of the interpolated
// table at arbitrary x, so nothing is shared with the oracle's own check.
double fd_residual(const Oracle& o, double x, double d) {
    static const double c1[] = {4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280};
    static const double c2[] = {8.0 / 5, -1.0 / 5, 8.0 / 315, -1.0 / 560};
    const auto& s = o.solution;
    double f1 = 0.0, f2 = -205.0 / 72 * s.eval(x);
    for (int j = 1; j <= 4; ++j) {
        const double fp = s.eval(x + j * d), fm = s.eval(x - j * d);
        f1 += c1[j - 1] * (fp - fm);
        f2 += c2[j - 1] * (fp + fm);
    }
    f1 /= d;
    f2 /= d * d;
    const double b = o.problem.drift(v1(x))[0];
    const double sg = o.problem.diffusion(v1(x))(0, 0);
    return std::abs(b * f1 + 0.5 * sg * sg * f2 - (o.phi(v1(x)) - s.pi_phi));
}

bool criterion1() {
    bool ok = true;
    for (const char* p : {"P1", "P2", "P3"}) {
        for (const char* phi : {"tanh", "x2_sat"}) {
            Stopwatch sw;
            const Oracle o = build_oracle(p, phi);
            const double build_s = sw.seconds();
            const double d = 0.01;
            const double lo = o.solution.grid.front() + 5 * d;
            const double hi = o.solution.grid.back() - 5 * d;
            double worst = 0.0;
            // every 4th node and the midpoints next to it
            const auto& g = o.solution.grid;
            for (std::size_t i = 0; i + 1 < g.size(); i += 4) {
                for (double x : {g[i], 0.5 * (g[i] + g[i + 1])}) {
                    if (x >= lo && x <= hi) worst = std::max(worst, fd_residual(o, x, d));
                }
            }
            const double secs = sw.seconds();
            const bool line = o.solution.residual_sup < 1e-8 && worst < 1e-8 && secs < 10.0;
            ok = ok && line;
            detail("%s %s %-6s: oracle residual %.2e, independent FD residual %.2e, %.2f s (build %.2f s)",
                   verdict(line), p, phi, o.solution.residual_sup, worst, secs, build_s);
        }
    }
    return ok;
}

bool criterion2() {
    Stopwatch sw;
    const Oracle o = build_oracle("P1", "x");
    SemigroupSettings st;
    st.seed = kSeed;
    st.workers = g_workers;
    const auto rep = verify_semigroup_route(o.problem, o.phi, o.solution, st);
    bool ok = rep.probes.size() == 5;
    for (const auto& pr : rep.probes) {
        // hand solution f(x) = -x
        const double tol = 3.0 * (pr.mc_stderr + pr.tail_bound);
        const bool line = std::abs(pr.mc_integral + pr.x) <= tol && std::abs(pr.table_value + pr.x) < 1e-8;
        ok = ok && line;
        detail("%s x = %+.1f: MC %.5f, hand -x %.5f, table %.5f, 3(se + tail) %.5f", verdict(line), pr.x,
               pr.mc_integral, -pr.x, pr.table_value, tol);
    }
    const double secs = sw.seconds();
    ok = ok && rep.status == "pass" && secs < 120.0;
    detail("route status %s, fitted lambda %.3f, %.1f s", rep.status.c_str(), rep.lambda_fit, secs);
    return ok;
}

bool criterion3() {
    bool ok = true;
    {
        Stopwatch sw;
        const Oracle o = build_oracle("P1", "x2");
        RepresentationSettings rs;
        rs.n_samples = 2000000;
        rs.seed = kSeed;
        rs.workers = g_workers;
        const double tau = 0.01;
        const auto r = error_representation_check(o.problem, spec(SchemeKind::EM, tau), o.phi, o.density,
                                                  o.solution, rs);
        const double exact = tau / (2.0 - tau);
        const bool closed = std::abs(r.lhs - exact) <= 3.0 * r.lhs_stderr;
        const bool identity = r.verdict == "pass";
        const double secs = sw.seconds();
        const bool line = closed && identity && secs < 600.0;
        ok = ok && line;
        detail("%s OU/EM x^2 tau 0.01: LHS %.5f +- %.5f vs closed form %.6f; RHS %.5f +- %.5f; verdict %s; %.1f s",
               verdict(line), r.lhs, r.lhs_stderr, exact, r.rhs, r.rhs_stderr, r.verdict.c_str(), secs);
    }
    const Oracle o = build_oracle("P2", "tanh");
    for (SchemeKind k : {SchemeKind::TEM, SchemeKind::BEM}) {
        Stopwatch sw;
        RepresentationSettings rs;
        rs.n_samples = 200000;
        rs.seed = kSeed;
        rs.workers = g_workers;
        const auto r = error_representation_check(o.problem, spec(k, 0.02), o.phi, o.density, o.solution, rs);
        const double secs = sw.seconds();
        const bool line = r.verdict == "pass" && r.n_mc >= 100000 && secs < 600.0;
        ok = ok && line;
        detail("%s P2/%s tanh tau 0.02: LHS %.2e +- %.1e, RHS %.2e +- %.1e, n_mc %zu, verdict %s, %.1f s",
               verdict(line), std::string(to_string(k)).c_str(), r.lhs, r.lhs_stderr, r.rhs, r.rhs_stderr,
               r.n_mc, r.verdict.c_str(), secs);
    }
    return ok;
}

bool slope_ok(const ConvergenceReport& r, double lo, double hi) {
    return r.status == "ok" && r.slope >= lo && r.slope <= hi && (r.slope_ci_lo > 0.5 || r.slope_ci_hi < 0.5);
}

void print_study(const char* tag, const ConvergenceReport& r, double secs) {
    detail("%s %s %s/%s: slope %.3f, CI [%.3f, %.3f], status %s, %.1f s", tag, r.scheme.c_str(),
           r.problem.c_str(), r.phi.c_str(), r.slope, r.slope_ci_lo, r.slope_ci_hi, r.status.c_str(), secs);
    for (const auto& row : r.rows) {
        detail("    tau %.4f  error %.3e  se %.1e  steps %zu", row.tau, row.abs_error, row.std_error, row.n_steps);
    }
}

bool criterion4() {
    Stopwatch total;
    bool ok = true;
    const Oracle tanh_o = build_oracle("P2", "tanh");
    const Oracle sat_o = build_oracle("P2", "x2_sat");
    for (SchemeKind k : {SchemeKind::TEM, SchemeKind::PEM, SchemeKind::BEM}) {
        StudySettings s;
        s.seed = kSeed;
        s.workers = g_workers;
        Stopwatch sw;
        const auto r = ergodic_error_study(tanh_o.problem, k, tanh_o.phi, tanh_o.solution.pi_phi,
                                           &tanh_o.solution, s);
        const bool line = slope_ok(r, 0.8, 1.2);
        ok = ok && line;
        print_study(verdict(line), r, sw.seconds());
    }
    for (SchemeKind k : {SchemeKind::TEM, SchemeKind::PEM, SchemeKind::BEM}) {
        StudySettings s;
        s.seed = kSeed;
        s.workers = g_workers;
        Stopwatch sw;
        const auto r = ergodic_error_study(sat_o.problem, k, sat_o.phi, sat_o.solution.pi_phi, &sat_o.solution, s);
        print_study(slope_ok(r, 0.8, 1.2) ? "info (x2_sat companion, slope in band)"
                                          : "info (x2_sat companion, slope out of band)",
                    r, sw.seconds());
    }
    const auto ou = exact_error_report({0.04, 0.02, 0.01, 0.005, 0.0025},
                                       [](double t) { return t / (2.0 - t); }, "OU/EM");
    const bool ou_line = slope_ok(ou, 0.9, 1.1);
    ok = ok && ou_line;
    detail("%s EM on OU, exact errors tau/(2 - tau): slope %.4f, CI [%.4f, %.4f]", verdict(ou_line), ou.slope,
           ou.slope_ci_lo, ou.slope_ci_hi);
    const double secs = total.seconds();
    ok = ok && secs < 1800.0;
    detail("total %.1f s", secs);
    return ok;
}

bool criterion5() {
    Stopwatch sw;
    const auto p3 = gallery_problem("P3");
    const Vec x0 = v1(3.0);
    const double tau = 0.1;
    const auto sq = [](const Vec& x) { return x.squaredNorm(); };
    const auto em = ensemble_expectation(p3, spec(SchemeKind::EM, tau), sq, x0, 1000 * tau, 200, kSeed, g_workers);
    const bool em_line = em.divergence_fraction > 0.5;
    detail("%s EM: %zu of %zu trajectories diverged within 1000 steps (%.1f%%)", verdict(em_line), em.n_diverged,
           em.n_traj, 100.0 * em.divergence_fraction);
    bool others = true;
    for (SchemeKind k : {SchemeKind::TEM, SchemeKind::PEM, SchemeKind::BEM}) {
        const auto e = ensemble_expectation(p3, spec(k, tau), sq, x0, 1000 * tau, 200, kSeed, g_workers);
        const auto m = moment_trace(p3, spec(k, tau), x0, 1.0, 200, 100000, kSeed, g_workers);
        const bool line = e.n_diverged == 0 && m.n_diverged == 0 && std::isfinite(m.running_sup);
        others = others && line;
        detail("%s %s: %zu diverged in 1000 steps; moment trace p = 1 over 1e5 steps: sup %.4f, final %.4f",
               verdict(line), std::string(to_string(k)).c_str(), e.n_diverged, m.running_sup,
               m.checkpoints.back().second);
    }
    const double secs = sw.seconds();
    detail("%.1f s", secs);
    return em_line && others && secs < 300.0;
}

bool criterion6() {
    Stopwatch sw;
    const auto p2 = gallery_problem("P2");
    const auto d2 = first_variation_decay(p2, v1(1.0), v1(1.0), 1.0, 5.0, 400, kSeed, {}, g_workers);
    const bool l2 = !d2.skipped && d2.lambda_hat > 0.0 && d2.r_squared >= 0.9;
    detail("%s P2, q = 1: lambda %.4f, r^2 %.4f (L1/2 = %.3f)%s%s", verdict(l2), d2.lambda_hat, d2.r_squared,
           0.5 * p2.params.L1, d2.notice.empty() ? "" : ", note: ", d2.notice.c_str());
    const auto d1 = first_variation_decay(gallery_problem("P1"), v1(1.0), v1(1.0), 1.0, 5.0, 100, kSeed, {}, g_workers);
    const bool l1 = !d1.skipped && std::abs(d1.lambda_hat - 1.0) <= 0.05;
    detail("%s OU: lambda %.5f, r^2 %.6f", verdict(l1), d1.lambda_hat, d1.r_squared);
    const double secs = sw.seconds();
    detail("%.1f s", secs);
    return l1 && l2 && secs < 300.0;
}

bool criterion7() {
    const double eps = std::numeric_limits<double>::epsilon();
    bool rem_ok = true;
    int n_rem = 0;
    for (const char* name : {"P2", "P3"}) {
        const Oracle o = build_oracle(name, "tanh");
        const SmoothFunction f = o.solution.as_function();
        double em_max = 0.0, bem_max = 0.0;
        for (std::uint64_t i = 0; i < 100; ++i) {
            // uniform on [-3, 3], where g_tau(x) stays inside the table
            const double x = -3.0 + 6.0 * uniform01(NoiseStream{kSeed, i}, 0, 0, 0);
            for (double tau : {0.01, 0.05}) {
                const auto em = deterministic_remainders(o.problem, spec(SchemeKind::EM, tau), f, v1(x));
                const auto bem = deterministic_remainders(o.problem, spec(SchemeKind::BEM, tau), f, v1(x));
                for (double r : em) em_max = std::max(em_max, std::abs(r));
                bem_max = std::max({bem_max, std::abs(bem[2]), std::abs(bem[3])});
                ++n_rem;
            }
        }
        const bool line = em_max == 0.0 && bem_max == 0.0;
        rem_ok = rem_ok && line;
        detail("%s %s: max |R3..R6| for EM %.1e, max |R5|, |R6| for BEM %.1e", verdict(line), name, em_max, bem_max);
    }
    bool end_ok = true;
    const auto p2 = gallery_problem("P2");
    for (SchemeKind k : {SchemeKind::EM, SchemeKind::TEM, SchemeKind::PEM, SchemeKind::BEM}) {
        SchemeSpec s = spec(k, 0.05);
        s.bem.tolerance = 1e-300;  // accept only at the rounding floor
        s.bem.max_iterations = 200;
        const auto maps = modification_maps(p2, s);
        double worst = 0.0;  // in units of eps * scale
        for (std::uint64_t i = 0; i < 100; ++i) {
            const Vec y0 = v1(2.0 * increment(NoiseStream{kSeed, i}, 1, 1, 1.0)[0]);
            const auto path = bridge(NoiseStream{kSeed + 1, i}, 0, 16, 1, s.tau);
            const Vec y1 = step(p2, s, y0, path.w.back());
            const Vec end = interpolate(p2, s, y0, path).back();
            const Vec target = k == SchemeKind::BEM ? maps.g_tau(y1) : y1;
            const double scale = 1.0 + std::abs(y1[0]) + s.tau * std::abs(p2.drift(y1)[0]);
            worst = std::max(worst, std::abs(end[0] - target[0]) / (eps * scale));
        }
        // MEM: bitwise; BEM: within the Newton rounding floor of 64 eps
        const bool line = k == SchemeKind::BEM ? worst <= 64.0 : worst == 0.0;
        end_ok = end_ok && line;
        detail("%s %s endpoint identity: max deviation %.1f eps (relative to 1 + |Y1| + tau |b(Y1)|)",
               verdict(line), std::string(to_string(k)).c_str(), worst);
    }
    return rem_ok && end_ok;
}

// Bit patterns of every reported double, in order.
using Fingerprint = std::vector<std::uint64_t>;

void put(Fingerprint& fp, double v) { fp.push_back(std::bit_cast<std::uint64_t>(v)); }

std::map<std::string, std::function<Fingerprint(int)>> reproducibility_runs() {
    std::map<std::string, std::function<Fingerprint(int)>> runs;
    runs["1 stein table"] = [](int) {
        const Oracle o = build_oracle("P2", "tanh");
        Fingerprint fp;
        for (double v : o.solution.f) put(fp, v);
        for (double v : o.solution.f4) put(fp, v);
        put(fp, o.solution.residual_sup);
        return fp;
    };
    runs["2 semigroup route"] = [](int w) {
        const Oracle o = build_oracle("P1", "x");
        SemigroupSettings st;
        st.n_traj = 400;
        st.T_max = 2.0;
        st.seed = kSeed;
        st.workers = w;
        const auto r = verify_semigroup_route(o.problem, o.phi, o.solution, st);
        Fingerprint fp;
        for (const auto& p : r.probes) {
            put(fp, p.mc_integral);
            put(fp, p.mc_stderr);
            put(fp, p.tail_bound);
        }
        put(fp, r.lambda_fit);
        return fp;
    };
    runs["3 representation check"] = [](int w) {
        const Oracle o = build_oracle("P2", "tanh");
        RepresentationSettings rs;
        rs.n_samples = 5000;
        rs.seed = kSeed;
        rs.workers = w;
        const auto r = error_representation_check(o.problem, spec(SchemeKind::BEM, 0.02), o.phi, o.density,
                                                  o.solution, rs);
        Fingerprint fp;
        for (double v : {r.lhs, r.lhs_stderr, r.rhs, r.rhs_stderr, r.atau_term, r.combined_error}) put(fp, v);
        for (double v : r.r_mean) put(fp, v);
        return fp;
    };
    runs["4 convergence study"] = [](int w) {
        const Oracle o = build_oracle("P2", "x2_sat");
        StudySettings s;
        s.tau_grid = {0.04, 0.02, 0.01};
        s.pilot_steps = 50000;
        s.min_steps = 50000;
        s.max_steps = 100000;
        s.seed = kSeed;
        s.workers = w;
        const auto r = ergodic_error_study(o.problem, SchemeKind::PEM, o.phi, o.solution.pi_phi, &o.solution, s);
        Fingerprint fp;
        for (const auto& row : r.rows) {
            put(fp, row.estimate);
            put(fp, row.std_error);
            fp.push_back(row.n_steps);
        }
        put(fp, r.slope);
        return fp;
    };
    runs["5 blow-up contrast"] = [](int w) {
        const auto p3 = gallery_problem("P3");
        const auto sq = [](const Vec& x) { return x.squaredNorm(); };
        const auto e = ensemble_expectation(p3, spec(SchemeKind::EM, 0.1), sq, v1(3.0), 100.0, 200, kSeed, w);
        const auto m = moment_trace(p3, spec(SchemeKind::BEM, 0.1), v1(3.0), 1.0, 50, 2000, kSeed, w);
        Fingerprint fp;
        put(fp, e.mean);
        put(fp, e.std_error);
        fp.push_back(e.n_diverged);
        for (const auto& [k, v] : m.checkpoints) put(fp, v);
        return fp;
    };
    runs["6 first-variation decay"] = [](int w) {
        const auto d = first_variation_decay(gallery_problem("P2"), v1(1.0), v1(1.0), 1.0, 1.0, 50, kSeed, {}, w);
        Fingerprint fp;
        put(fp, d.lambda_hat);
        put(fp, d.r_squared);
        for (const auto& [t, y] : d.series) put(fp, y);
        return fp;
    };
    runs["7 remainder terms"] = [](int w) {
        const Oracle o = build_oracle("P2", "x2_sat");
        const auto r = remainder_terms(o.problem, spec(SchemeKind::TEM, 0.02), o.solution.as_function(), v1(0.7),
                                       5000, 16, kSeed, w);
        Fingerprint fp;
        for (double v : r.r) put(fp, v);
        for (double v : r.r_stderr) put(fp, v);
        put(fp, r.atau_f);
        put(fp, r.identity_gap);
        return fp;
    };
    return runs;
}

bool criterion8() {
    Stopwatch sw;
    bool ok = true;
    for (const auto& [name, run] : reproducibility_runs()) {
        const Fingerprint a = run(1);
        const Fingerprint b = run(4);
        const Fingerprint c = run(4);
        const bool line = !a.empty() && a == b && b == c;
        ok = ok && line;
        detail("%s %s: %zu values, workers 1 vs 4 %s, repeat %s", verdict(line), name.c_str(), a.size(),
               a == b ? "identical" : "DIFFER", b == c ? "identical" : "DIFFER");
    }
    detail("%.1f s", sw.seconds());
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ergostein acceptance suite"};
    std::vector<int> criteria;
    app.add_option("--criterion", criteria, "criteria to run (default: all)")->check(CLI::Range(1, 8));
    app.add_option("--workers", g_workers, "worker threads")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);
    if (criteria.empty()) criteria = {1, 2, 3, 4, 5, 6, 7, 8};

    const std::map<int, std::pair<const char*, bool (*)()>> table{
        {1, {"Stein residual below 1e-8 on P1-P3", criterion1}},
        {2, {"semigroup integral matches f = -x on OU", criterion2}},
        {3, {"error representation identity", criterion3}},
        {4, {"first-order ergodic error rate", criterion4}},
        {5, {"blow-up contrast on the double well", criterion5}},
        {6, {"first-variation decay", criterion6}},
        {7, {"structural exactness", criterion7}},
        {8, {"bitwise reproducibility", criterion8}},
    };
    bool all = true;
    for (int c : criteria) {
        const auto& [title, fn] = table.at(c);
        bool ok = false;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            detail("error: %s", e.what());
        }
        all = all && ok;
        std::printf("criterion %d: %s - %s\n", c, verdict(ok), title);
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
