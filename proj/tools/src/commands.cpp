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

#include "ergostein_cli/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ergostein/assumptions.hpp"
#include "ergostein/converge.hpp"
#include "ergostein/ergodic.hpp"
#include "ergostein/error.hpp"
#include "ergostein/oracle1d.hpp"
#include "ergostein/quadrature.hpp"
#include "ergostein/stein_check.hpp"

namespace ergostein::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string verdict_name(int code) {
    switch (code) {
        case kPass: return "pass";
        case kFail: return "fail";
        case kInconclusive: return "inconclusive";
        default: return "error";
    }
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Vec start_point(const RunConfig& c, int dim) { return Vec::Constant(dim, c.run.x0); }

fs::path out_dir(const Invocation& inv) {
    fs::path dir(inv.config.output.dir);
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
    return os;
}

// Writes <command>.json or <command>.csv and returns `code`.
int emit(const Invocation& inv, const std::string& command, const json& result, int code) {
    const auto& cfg = inv.config;
    const auto dir = out_dir(inv);
    const std::string digest = config_digest(cfg);
    if (cfg.output.format == "csv") {
        auto os = open_out(dir / (command + ".csv"));
        std::istringstream ini(serialize_config(cfg));
        for (std::string line; std::getline(ini, line);) os << (line.empty() ? "#" : "# " + line) << '\n';
        os << "key,value\n";
        os << "command," << command << '\n';
        os << "verdict," << verdict_name(code) << '\n';
        os << "seed," << cfg.run.seed << '\n';
        os << "config_digest," << digest << '\n';
        const json flat = result.flatten();
        for (const auto& [key, value] : flat.items()) {
            os << key << ',' << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
        }
    } else {
        json report;
        report["command"] = command;
        report["verdict"] = verdict_name(code);
        report["seed"] = cfg.run.seed;
        report["config_digest"] = digest;
        report["config"] = serialize_config(cfg);
        report["result"] = result;
        auto os = open_out(dir / (command + ".json"));
        os << report.dump(2) << '\n';
    }
    if (inv.log) *inv.log << command << ": " << verdict_name(code) << '\n';
    return code;
}

void say(const Invocation& inv, const std::string& line) {
    if (inv.log) *inv.log << line << '\n';
}

json assumption_json(const AssumptionReport& r) {
    json parts = json::object();
    for (const auto& [name, margin] : r.parts) parts[name] = margin;
    json witness = json::array();
    for (const auto& w : r.witness) witness.push_back(vec_json(w));
    return {{"condition", std::string(to_string(r.checked_condition))},
            {"n_samples", r.n_samples},
            {"worst_margin", r.worst_margin},
            {"violated", r.violated()},
            {"label", r.label()},
            {"witness", witness},
            {"parts", parts}};
}

json estimate_json(const ErgodicEstimate& e) {
    return {{"phi_mean", e.phi_mean},
            {"std_error", e.std_error},
            {"n_steps", e.n_steps},
            {"burn_in", e.burn_in},
            {"n_batches", e.n_batches},
            {"n_samples", e.n_samples},
            {"n_chains", e.n_chains},
            {"diverged", e.diverged},
            {"divergence_step", e.divergence_step ? json(*e.divergence_step) : json(nullptr)}};
}

json rows_json(const ConvergenceReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"tau", row.tau},
                        {"estimate", row.estimate},
                        {"abs_error", row.abs_error},
                        {"std_error", row.std_error},
                        {"n_steps", row.n_steps},
                        {"signal", row.signal()}});
    }
    return rows;
}

void require_scalar(const SdeProblem& p, const char* command) {
    if (p.dim_state != 1 || p.dim_noise != 1) {
        throw InvalidArgument(std::string(command) + " needs a scalar problem (d = m = 1)");
    }
}

// pi_tau of EM on the OU problem is N(0, 2 / (2 - tau)).
double ou_em_exact_error(const SmoothFunction& phi, double tau) {
    static const QuadratureRule gh = gauss_hermite(64);
    const double sd = std::sqrt(2.0 / (2.0 - tau));
    double diff = 0.0;
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
        diff += gh.weights[i] * (phi(Vec::Constant(1, sd * gh.nodes[i])) -
                                 phi(Vec::Constant(1, gh.nodes[i])));
    }
    return std::abs(diff);
}

}  // namespace

int cmd_check_assumptions(const Invocation& inv) {
    const auto& cfg = inv.config;
    const SdeProblem problem = build_problem(cfg.problem);
    SampleSpec spec;
    spec.n_samples = cfg.run.samples;
    spec.seed = cfg.run.seed;
    const std::array reports{check_monotonicity(problem, spec), check_coercivity(problem, spec),
                             check_growth_bounds(problem, spec)};
    json result;
    result["problem"] = problem.name;
    result["status"] = std::string(to_string(problem.status));
    result["checks"] = json::array();
    bool violated = false;
    for (const auto& r : reports) {
        result["checks"].push_back(assumption_json(r));
        violated = violated || r.violated();
        say(inv, std::string(to_string(r.checked_condition)) + ": " + r.label());
    }
    return emit(inv, "check-assumptions", result, violated ? kFail : kPass);
}

int cmd_simulate(const Invocation& inv) {
    const auto& cfg = inv.config;
    const SdeProblem problem = build_problem(cfg.problem);
    const SchemeSpec scheme = build_scheme(cfg.scheme, cfg.scheme.tau);
    const SmoothFunction phi = named_test_function(cfg.run.phi, problem.dim_state);
    const Vec y0 = start_point(cfg, problem.dim_state);

    // The trace follows chain 0, the same path the first chain of the average uses.
    const auto dir = out_dir(inv);
    {
        auto os = open_out(dir / "trace.csv");
        os << "k,t";
        for (int i = 0; i < problem.dim_state; ++i) os << ",y" << i;
        os << ",phi\n";
        os.precision(17);
        Trajectory traj = simulate_chain(problem, scheme, y0, cfg.run.n_steps,
                                         NoiseStream{cfg.run.seed, 0}, cfg.run.thin);
        do {
            os << traj.k() << ',' << traj.t();
            for (int i = 0; i < problem.dim_state; ++i) os << ',' << traj.state()[i];
            os << ',' << phi(traj.state()) << '\n';
        } while (traj.next());
        if (traj.diverged()) {
            os << traj.k() << ',' << traj.t();
            for (int i = 0; i < problem.dim_state; ++i) os << ',' << traj.state()[i];
            os << ",nan\n";
        }
    }

    ChainAverageSpec spec;
    spec.n_steps = cfg.run.n_steps;
    spec.burn_in_fraction = cfg.run.burn_in_fraction;
    spec.n_batches = cfg.run.n_batches;
    spec.n_chains = cfg.run.n_chains;
    const auto est = chain_average(problem, scheme, phi, y0, spec, cfg.run.seed, inv.workers);

    json result;
    result["problem"] = problem.name;
    result["scheme"] = std::string(to_string(scheme.kind));
    result["tau"] = scheme.tau;
    result["phi"] = phi.name;
    result["x0"] = vec_json(y0);
    result["trace"] = "trace.csv";
    result["estimate"] = estimate_json(est);
    say(inv, "time average " + std::to_string(est.phi_mean) + " +- " + std::to_string(est.std_error) +
                 (est.diverged ? " (diverged)" : ""));
    return emit(inv, "simulate", result, est.diverged ? kFail : kPass);
}

int cmd_converge(const Invocation& inv) {
    const auto& cfg = inv.config;
    const SdeProblem problem = build_problem(cfg.problem);
    const SmoothFunction phi = named_test_function(cfg.run.phi, problem.dim_state);
    const SchemeKind kind = parse_scheme_kind(cfg.scheme.kind);
    (void)build_scheme(cfg.scheme, cfg.scheme.tau_grid.front());
    require_scalar(problem, "converge");

    ConvergenceReport report;
    if (cfg.run.estimator == "exact") {
        if (problem.name != "P1" || kind != SchemeKind::EM) {
            throw InvalidArgument("estimator 'exact' is available for EM on P1 only");
        }
        report = exact_error_report(
            cfg.scheme.tau_grid, [&](double tau) { return ou_em_exact_error(phi, tau); },
            "P1/em/" + phi.name);
        report.problem = problem.name;
        report.scheme = "em";
        report.phi = phi.name;
        report.estimator = "exact";
    } else {
        const auto density = stationary_density(problem);
        const auto estimator = parse_estimator(cfg.run.estimator);
        std::optional<SteinSolution1d> solution;
        if (estimator == ErgodicEstimator::SteinControl) solution = stein_solution(problem, density, phi);
        StudySettings st;
        st.tau_grid = cfg.scheme.tau_grid;
        st.estimator = estimator;
        st.pilot_steps = cfg.run.pilot_steps;
        st.min_steps = cfg.run.min_steps;
        st.max_steps = cfg.run.max_steps;
        st.budget_scale = cfg.run.budget_scale;
        st.n_chains = cfg.run.n_chains;
        st.x0 = cfg.run.x0;
        st.seed = cfg.run.seed;
        st.workers = inv.workers;
        const double pi_phi = solution ? solution->pi_phi : pi_of(density, phi);
        report = ergodic_error_study(problem, kind, phi, pi_phi, solution ? &*solution : nullptr, st);
    }

    const auto dir = out_dir(inv);
    {
        auto os = open_out(dir / "converge_rows.csv");
        write_rows_csv(os, report);
    }
    {
        auto os = open_out(dir / "converge.gp");
        write_gnuplot(os, report, "converge_rows.csv");
    }

    int code = kInconclusive;
    if (report.status == "ok") {
        const bool in_band = report.slope >= cfg.run.slope_lo && report.slope <= cfg.run.slope_hi;
        const bool excludes_half = report.slope_ci_lo > 0.5 || report.slope_ci_hi < 0.5;
        code = in_band && excludes_half ? kPass : kFail;
    }
    json result;
    result["problem"] = report.problem;
    result["scheme"] = report.scheme;
    result["phi"] = report.phi;
    result["estimator"] = report.estimator;
    result["pi_phi"] = report.pi_phi;
    result["slope"] = report.slope;
    result["intercept"] = report.intercept;
    result["slope_ci"] = {report.slope_ci_lo, report.slope_ci_hi};
    result["n_signal"] = report.n_signal;
    result["status"] = report.status;
    result["slope_band"] = {cfg.run.slope_lo, cfg.run.slope_hi};
    result["pilot_error"] = report.pilot_error;
    result["pilot_stderr"] = report.pilot_stderr;
    result["rows"] = rows_json(report);
    result["rows_csv"] = "converge_rows.csv";
    result["gnuplot"] = "converge.gp";
    say(inv, "slope " + std::to_string(report.slope) + " [" + std::to_string(report.slope_ci_lo) +
                 ", " + std::to_string(report.slope_ci_hi) + "] " + report.status);
    return emit(inv, "converge", result, code);
}

int cmd_stein_verify(const Invocation& inv) {
    const auto& cfg = inv.config;
    const SdeProblem problem = build_problem(cfg.problem);
    require_scalar(problem, "stein-verify");
    const SchemeSpec scheme = build_scheme(cfg.scheme, cfg.scheme.tau);
    const SmoothFunction phi = named_test_function(cfg.run.phi, 1);
    const auto density = stationary_density(problem);
    const auto solution = stein_solution(problem, density, phi);
    const double fd_residual = stein_residual_fd(problem, solution.grid, solution.f, phi, solution.pi_phi);

    const auto dir = out_dir(inv);
    {
        auto os = open_out(dir / "stein_table.csv");
        write_table_csv(os, density, solution);
    }

    RepresentationSettings rs;
    rs.n_samples = cfg.run.n_mc;
    rs.n_sub = cfg.run.n_sub;
    rs.x0 = cfg.run.x0;
    rs.n_batches = cfg.run.n_batches;
    rs.seed = cfg.run.seed;
    rs.workers = inv.workers;
    const auto rep = error_representation_check(problem, scheme, phi, density, solution, rs);

    const SmoothFunction f = solution.as_function("f_" + phi.name);
    const auto rem = remainder_terms(problem, scheme, f, Vec::Constant(1, cfg.run.x0), cfg.run.n_mc,
                                     cfg.run.n_sub, derive_seed(cfg.run.seed, 1), inv.workers);

    const bool residual_ok = solution.residual_sup < 1e-8 && fd_residual < 1e-8;
    int code = kFail;
    if (residual_ok && rep.verdict == "pass" && rem.identity_pass) {
        code = kPass;
    } else if (residual_ok && rep.verdict == "inconclusive" && rem.identity_pass) {
        code = kInconclusive;
    }

    json r_mean = json::array();
    for (double v : rep.r_mean) r_mean.push_back(v);
    json rr = json::array();
    json rr_se = json::array();
    for (int i = 0; i < 6; ++i) {
        rr.push_back(rem.r[i]);
        rr_se.push_back(rem.r_stderr[i]);
    }
    json result;
    result["problem"] = problem.name;
    result["scheme"] = std::string(to_string(scheme.kind));
    result["tau"] = scheme.tau;
    result["phi"] = phi.name;
    result["pi_phi"] = solution.pi_phi;
    result["stein"] = {{"residual_sup", solution.residual_sup},
                       {"residual_fd", fd_residual},
                       {"gauge_constant", solution.gauge_constant},
                       {"R", solution.R},
                       {"h", solution.h},
                       {"table", "stein_table.csv"}};
    result["representation"] = {{"pi_tau_estimate", rep.pi_tau_estimate},
                                {"lhs", rep.lhs},
                                {"lhs_stderr", rep.lhs_stderr},
                                {"rhs", rep.rhs},
                                {"rhs_stderr", rep.rhs_stderr},
                                {"atau_term", rep.atau_term},
                                {"atau_term_stderr", rep.atau_term_stderr},
                                {"r_mean", r_mean},
                                {"oracle_error", rep.oracle_error},
                                {"combined_error", rep.combined_error},
                                {"n_mc", rep.n_mc},
                                {"chain_steps", rep.chain_steps},
                                {"equilibration_gap", rep.equilibration_gap},
                                {"verdict", rep.verdict}};
    result["remainder_identity"] = {{"x", cfg.run.x0},
                                    {"r", rr},
                                    {"r_stderr", rr_se},
                                    {"atau_f", rem.atau_f},
                                    {"atau_stderr", rem.atau_stderr},
                                    {"tau_generator", rem.tau_generator},
                                    {"gap", rem.identity_gap},
                                    {"error", rem.identity_error},
                                    {"floor", rem.identity_floor},
                                    {"pass", rem.identity_pass},
                                    {"n_diverged", rem.n_diverged}};
    say(inv, "residual " + std::to_string(solution.residual_sup) + ", representation " + rep.verdict +
                 ", remainder identity " + (rem.identity_pass ? "pass" : "fail"));
    return emit(inv, "stein-verify", result, code);
}

int cmd_blowup_demo(const Invocation& inv) {
    const auto& cfg = inv.config;
    const SdeProblem problem = build_problem(cfg.problem);
    const SmoothFunction phi = named_test_function(cfg.run.phi, problem.dim_state);
    const Vec y0 = start_point(cfg, problem.dim_state);
    const double horizon = static_cast<double>(cfg.run.n_steps) * cfg.scheme.tau;

    json schemes = json::object();
    double em_fraction = 0.0;
    bool others_clean = true;
    const auto dir = out_dir(inv);
    for (SchemeKind kind : {SchemeKind::EM, SchemeKind::TEM, SchemeKind::PEM, SchemeKind::BEM}) {
        SchemeConfig sc = cfg.scheme;
        sc.kind = std::string(to_string(kind));
        const SchemeSpec scheme = build_scheme(sc, cfg.scheme.tau);
        const auto ens = ensemble_expectation(problem, scheme, phi, y0, horizon, cfg.run.n_traj,
                                              cfg.run.seed, inv.workers);
        const auto trace = moment_trace(problem, scheme, y0, cfg.run.p, cfg.run.n_traj,
                                        cfg.run.moment_steps, cfg.run.seed, inv.workers);
        const std::string name(to_string(kind));
        {
            auto os = open_out(dir / ("moments_" + name + ".csv"));
            os.precision(17);
            os << "k,moment\n";
            for (const auto& [k, m] : trace.checkpoints) os << k << ',' << m << '\n';
        }
        const bool finite = std::isfinite(trace.running_sup);
        schemes[name] = {{"divergence_fraction", ens.divergence_fraction},
                         {"n_diverged", ens.n_diverged},
                         {"n_traj", ens.n_traj},
                         {"steps", cfg.run.n_steps},
                         {"moment_p", trace.p},
                         {"moment_steps", cfg.run.moment_steps},
                         {"moment_running_sup", trace.running_sup},
                         {"moment_finite", finite},
                         {"moment_diverged", trace.n_diverged},
                         {"moments_csv", "moments_" + name + ".csv"}};
        if (kind == SchemeKind::EM) {
            em_fraction = ens.divergence_fraction;
        } else {
            others_clean = others_clean && ens.n_diverged == 0 && finite;
        }
        say(inv, name + ": divergence fraction " + std::to_string(ens.divergence_fraction) +
                     ", moment sup " + std::to_string(trace.running_sup));
    }
    json result;
    result["problem"] = problem.name;
    result["tau"] = cfg.scheme.tau;
    result["x0"] = vec_json(y0);
    result["schemes"] = schemes;
    result["em_majority_diverged"] = em_fraction > 0.5;
    result["others_clean"] = others_clean;
    return emit(inv, "blowup-demo", result, em_fraction > 0.5 && others_clean ? kPass : kFail);
}

}  // namespace ergostein::cli
