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

#include "ergostein/converge.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>

#include "ergostein/ergodic.hpp"
#include "ergostein/error.hpp"
#include "ergostein/noise.hpp"
#include "ergostein/quadrature.hpp"

namespace ergostein {

namespace {

ScalarField make_integrand(const SdeProblem& problem, const SchemeSpec& scheme,
                           const SmoothFunction& phi, const SteinSolution1d* solution,
                           ErgodicEstimator est, int gh_nodes) {
    if (est == ErgodicEstimator::Plain) return [&phi](const Vec& x) { return phi(x); };
    if (solution == nullptr) {
        throw InvalidArgument("ergodic_error_study: the control estimator needs a Stein table");
    }
    if (problem.dim_state != 1 || problem.dim_noise != 1) {
        throw InvalidArgument("ergodic_error_study: the control estimator needs d = m = 1");
    }
    const QuadratureRule gh = gauss_hermite(gh_nodes);
    const SmoothFunction f = solution->as_function();
    const double sq = std::sqrt(scheme.tau);
    return [&problem, &phi, scheme, gh, f, sq](const Vec& x) {
        double ef = 0.0;
        for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
            ef += gh.weights[i] * f(step(problem, scheme, x, scalar_vec(sq * gh.nodes[i])));
        }
        return phi(x) - (ef - f(x)) / scheme.tau;
    };
}

std::size_t clamp_steps(double n, const StudySettings& s) {
    if (!std::isfinite(n)) return s.max_steps;
    n *= s.budget_scale;
    const double lo = static_cast<double>(s.min_steps);
    const double hi = static_cast<double>(s.max_steps);
    return static_cast<std::size_t>(std::clamp(n, lo, hi));
}

}  // namespace

bool ConvergenceRow::signal() const {
    if (!std::isfinite(abs_error)) return false;
    if (std_error == 0.0) return abs_error > 0.0;
    return abs_error > 3.0 * std_error;
}

OrderFit fit_order(const std::vector<ConvergenceRow>& rows) {
    std::vector<const ConvergenceRow*> use;
    for (const auto& r : rows) {
        if (r.signal() && r.tau > 0.0) use.push_back(&r);
    }
    if (use.size() < 3) {
        throw InvalidArgument("fit_order: need at least 3 rows with error above 3 stderr, got " +
                              std::to_string(use.size()));
    }
    const bool exact = std::all_of(use.begin(), use.end(),
                                   [](const ConvergenceRow* r) { return r->std_error == 0.0; });
    const std::size_t n = use.size();
    std::vector<double> x(n), y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::log(use[i]->tau);
        y[i] = std::log(use[i]->abs_error);
        const double rel = use[i]->std_error / use[i]->abs_error;
        w[i] = exact ? 1.0 : (rel > 0.0 ? 1.0 / (rel * rel) : 1.0 / (1e-16 * 1e-16));
    }
    double sw = 0.0;
    double xm = 0.0;
    double ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        xm += w[i] * x[i];
        ym += w[i] * y[i];
    }
    xm /= sw;
    ym /= sw;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w[i] * (x[i] - xm) * (x[i] - xm);
        sxy += w[i] * (x[i] - xm) * (y[i] - ym);
    }
    if (!(sxx > 0.0)) throw InvalidArgument("fit_order: all tau values coincide");
    OrderFit fit;
    fit.n_used = static_cast<int>(n);
    fit.slope = sxy / sxx;
    fit.intercept = ym - fit.slope * xm;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ssr += w[i] * r * r;
    }
    const double dof = static_cast<double>(n) - 2.0;
    const double se = std::sqrt(ssr / dof / sxx);
    const boost::math::students_t dist(dof);
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    fit.ci_lo = fit.slope - t * se;
    fit.ci_hi = fit.slope + t * se;
    return fit;
}

std::string_view to_string(ErgodicEstimator e) {
    return e == ErgodicEstimator::Plain ? "plain" : "stein-control";
}

ErgodicEstimator parse_estimator(std::string_view s) {
    if (s == "plain") return ErgodicEstimator::Plain;
    if (s == "stein-control" || s == "control") return ErgodicEstimator::SteinControl;
    throw InvalidArgument("unknown estimator '" + std::string(s) + "' (expected plain|stein-control)");
}

ConvergenceReport ergodic_error_study(const SdeProblem& problem, SchemeKind kind,
                                      const SmoothFunction& phi, double pi_phi,
                                      const SteinSolution1d* solution,
                                      const StudySettings& settings) {
    if (settings.tau_grid.size() < 3) {
        throw InvalidArgument("ergodic_error_study: tau_grid needs at least 3 values");
    }
    if (settings.n_chains < 1 || settings.pilot_steps < 1000 ||
        settings.min_steps > settings.max_steps) {
        throw InvalidArgument("ergodic_error_study: invalid budget settings");
    }
    std::vector<double> taus = settings.tau_grid;
    std::sort(taus.begin(), taus.end(), std::greater<>());
    if (std::adjacent_find(taus.begin(), taus.end()) != taus.end()) {
        throw InvalidArgument("ergodic_error_study: tau_grid has duplicates");
    }
    const Vec y0 = Vec::Constant(problem.dim_state, settings.x0);

    ConvergenceReport rep;
    rep.scheme = std::string(to_string(kind));
    rep.problem = problem.name;
    rep.phi = phi.name;
    rep.estimator = std::string(to_string(settings.estimator));
    rep.pi_phi = pi_phi;
    rep.seed = settings.seed;

    auto run = [&](double tau, std::size_t n_steps, std::uint64_t seed) {
        const SchemeSpec scheme{kind, tau, {}};
        scheme.validate();
        const ScalarField g =
            make_integrand(problem, scheme, phi, solution, settings.estimator, settings.gh_nodes);
        ChainAverageSpec spec;
        spec.n_chains = settings.n_chains;
        spec.n_steps = std::max<std::size_t>(n_steps / static_cast<std::size_t>(settings.n_chains), 1000);
        return chain_average(problem, scheme, g, y0, spec, seed, settings.workers);
    };

    // Pilot at the largest tau.
    const ErgodicEstimate pilot = run(taus.front(), settings.pilot_steps, derive_seed(settings.seed, 0x70696c6f74ULL));
    rep.pilot_error = pilot.phi_mean - pi_phi;
    rep.pilot_stderr = pilot.std_error;
    const double kappa = settings.estimator == ErgodicEstimator::Plain ? 3.0 : 1.0;
    double n_req = std::numeric_limits<double>::infinity();
    if (std::isfinite(rep.pilot_error) && std::abs(rep.pilot_error) > 2.0 * rep.pilot_stderr) {
        const double ratio = 5.0 * rep.pilot_stderr / std::abs(rep.pilot_error);
        n_req = static_cast<double>(settings.pilot_steps) * ratio * ratio;
    }

    for (std::size_t i = 0; i < taus.size(); ++i) {
        const double tau = taus[i];
        const std::size_t n = clamp_steps(n_req * std::pow(taus.front() / tau, kappa), settings);
        const ErgodicEstimate est = run(tau, n, derive_seed(settings.seed, i + 1));
        ConvergenceRow row;
        row.tau = tau;
        row.estimate = est.phi_mean;
        row.abs_error = std::abs(est.phi_mean - pi_phi);
        row.std_error = est.std_error;
        row.n_steps = est.n_steps * static_cast<std::size_t>(est.n_chains);
        rep.rows.push_back(row);
    }
    for (const auto& r : rep.rows) rep.n_signal += r.signal() ? 1 : 0;
    if (rep.n_signal < 3) {
        rep.status = "inconclusive - increase budget";
        rep.slope = rep.slope_ci_lo = rep.slope_ci_hi = std::numeric_limits<double>::quiet_NaN();
        return rep;
    }
    const OrderFit fit = fit_order(rep.rows);
    rep.slope = fit.slope;
    rep.intercept = fit.intercept;
    rep.slope_ci_lo = fit.ci_lo;
    rep.slope_ci_hi = fit.ci_hi;
    rep.status = "ok";
    return rep;
}

ConvergenceReport exact_error_report(const std::vector<double>& tau_grid,
                                     const std::function<double(double)>& exact_error,
                                     const std::string& label) {
    ConvergenceReport rep;
    rep.estimator = "exact";
    rep.phi = label;
    std::vector<double> taus = tau_grid;
    std::sort(taus.begin(), taus.end(), std::greater<>());
    for (double tau : taus) {
        ConvergenceRow row;
        row.tau = tau;
        row.abs_error = std::abs(exact_error(tau));
        rep.rows.push_back(row);
    }
    for (const auto& r : rep.rows) rep.n_signal += r.signal() ? 1 : 0;
    const OrderFit fit = fit_order(rep.rows);
    rep.slope = fit.slope;
    rep.intercept = fit.intercept;
    rep.slope_ci_lo = fit.ci_lo;
    rep.slope_ci_hi = fit.ci_hi;
    rep.status = "ok";
    return rep;
}

void write_rows_csv(std::ostream& os, const ConvergenceReport& report) {
    os << "tau,error,stderr,estimate,n_steps\n";
    os.precision(17);
    for (const auto& r : report.rows) {
        os << r.tau << ',' << r.abs_error << ',' << r.std_error << ',' << r.estimate << ','
           << r.n_steps << '\n';
    }
}

void write_gnuplot(std::ostream& os, const ConvergenceReport& report, const std::string& csv_path) {
    os << "set datafile separator ','\n"
       << "set logscale xy\n"
       << "set xlabel 'tau'\n"
       << "set ylabel '|pi_tau(phi) - pi(phi)|'\n"
       << "set key top left\n";
    os.precision(17);
    if (std::isfinite(report.slope)) {
        os << "f(x) = exp(" << report.intercept << ") * x**" << report.slope << "\n";
        os << "plot '" << csv_path
           << "' every ::1 using 1:2:3 with yerrorbars title 'error', f(x) title 'slope "
           << report.slope << "'\n";
    } else {
        os << "plot '" << csv_path << "' every ::1 using 1:2:3 with yerrorbars title 'error'\n";
    }
}

}  // namespace ergostein
