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

#include "ergostein/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ergostein/assumptions.hpp"
#include "ergostein/error.hpp"
#include "ergostein/parallel.hpp"

namespace ergostein {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

bool escaped(const Vec& y) { return !y.allFinite() || y.norm() > kDivergenceThreshold; }

// Batch sums of one chain. Values are accumulated relative to the first
// retained value so that constant integrands give exact results.
struct ChainBatches {
    double shift = 0.0;
    double mean = 0.0;
    std::vector<double> batch_means;
    std::size_t n_samples = 0;
    bool diverged = false;
    std::optional<std::size_t> divergence_step;
};

std::size_t retained_after(std::size_t n_steps, std::size_t thin, std::size_t burn_in) {
    const std::size_t total = (n_steps + thin - 1) / thin;
    const std::size_t skipped = burn_in / thin;
    return total > skipped ? total - skipped : 0;
}

ChainBatches run_batches(const ScalarField& phi, Trajectory& traj, std::size_t burn_in,
                         int n_batches) {
    ChainBatches out;
    const std::size_t N = retained_after(traj.n_steps(), traj.thin(), burn_in);
    if (N < static_cast<std::size_t>(n_batches)) {
        throw InvalidArgument("time_average: fewer retained samples than batches");
    }
    out.batch_means.assign(static_cast<std::size_t>(n_batches), 0.0);
    std::vector<double> sums(static_cast<std::size_t>(n_batches), 0.0);
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_batches), 0);
    double total = 0.0;
    std::size_t i = 0;
    bool first = true;
    while (traj.next()) {
        if (traj.k() <= burn_in) continue;
        const double v = phi(traj.state());
        if (first) {
            out.shift = v;
            first = false;
        }
        const double dv = v - out.shift;
        const std::size_t b = i * static_cast<std::size_t>(n_batches) / N;
        sums[b] += dv;
        ++counts[b];
        total += dv;
        ++i;
    }
    if (traj.diverged()) {
        out.diverged = true;
        out.divergence_step = traj.divergence_step();
        out.mean = kNaN;
        return out;
    }
    out.n_samples = i;
    out.mean = out.shift + total / static_cast<double>(i);
    for (std::size_t b = 0; b < sums.size(); ++b) {
        out.batch_means[b] = out.shift + sums[b] / static_cast<double>(counts[b]);
    }
    return out;
}

double batch_std_error(const std::vector<double>& means, double center) {
    const std::size_t n = means.size();
    if (n < 2) return 0.0;
    double s = 0.0;
    for (double m : means) s += m - center;
    const double mbar = s / static_cast<double>(n);
    double ss = 0.0;
    for (double m : means) {
        const double d = (m - center) - mbar;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

std::size_t steps_for_horizon(double T, double tau) {
    const double r = T / tau;
    const double n = std::round(r);
    if (std::abs(r - n) > 1e-9 * std::max(1.0, r)) {
        std::ostringstream os;
        os << "horizon T = " << T << " is not a multiple of tau = " << tau;
        throw InvalidArgument(os.str());
    }
    return static_cast<std::size_t>(n);
}

}  // namespace

Trajectory::Trajectory(const SdeProblem& problem, const SchemeSpec& scheme, Vec y0,
                       std::size_t n_steps, NoiseStream stream, std::size_t thin)
    : problem_(&problem),
      scheme_(scheme),
      y_(std::move(y0)),
      n_steps_(n_steps),
      stream_(stream),
      thin_(thin) {
    if (n_steps == 0) throw InvalidArgument("simulate_chain: n_steps must be >= 1");
    if (thin == 0) throw InvalidArgument("simulate_chain: thinning stride must be >= 1");
    if (y_.size() != problem.dim_state) throw InvalidArgument("simulate_chain: y0 has wrong dimension");
    scheme_.validate();
    if (escaped(y_)) divergence_step_ = 0;
}

bool Trajectory::next() {
    if (divergence_step_ || k_ >= n_steps_) return false;
    const std::size_t stop = std::min(n_steps_, k_ + thin_);
    const int m = problem_->dim_noise;
    while (k_ < stop) {
        const Vec dW = increment(stream_, k_, m, scheme_.tau);
        try {
            y_ = step(*problem_, scheme_, y_, dW);
        } catch (const SolverFailure& e) {
            std::ostringstream os;
            os << e.what() << " at step " << (k_ + 1) << " (trajectory " << stream_.trajectory_id
               << ")";
            throw SolverFailure(os.str(), e.residual(), static_cast<std::int64_t>(k_ + 1));
        }
        ++k_;
        if (escaped(y_)) {
            divergence_step_ = k_;
            return false;
        }
    }
    return true;
}

Trajectory simulate_chain(const SdeProblem& problem, const SchemeSpec& scheme, const Vec& y0,
                          std::size_t n_steps, const NoiseStream& stream, std::size_t thin) {
    return Trajectory(problem, scheme, y0, n_steps, stream, thin);
}

ErgodicEstimate time_average(const ScalarField& phi, Trajectory& trajectory, std::size_t burn_in,
                             int n_batches) {
    if (burn_in >= trajectory.n_steps()) throw InvalidArgument("time_average: burn_in >= n_steps");
    if (n_batches < 8) throw InvalidArgument("time_average: n_batches must be >= 8");
    ErgodicEstimate est;
    est.n_steps = trajectory.n_steps();
    est.burn_in = burn_in;
    est.n_batches = n_batches;
    est.seed = trajectory.stream().seed;
    const ChainBatches cb = run_batches(phi, trajectory, burn_in, n_batches);
    est.diverged = cb.diverged;
    est.divergence_step = cb.divergence_step;
    est.n_samples = cb.n_samples;
    if (cb.diverged) {
        est.phi_mean = kNaN;
        est.std_error = kNaN;
        return est;
    }
    est.phi_mean = cb.mean;
    est.std_error = batch_std_error(cb.batch_means, cb.mean);
    return est;
}

ErgodicEstimate chain_average(const SdeProblem& problem, const SchemeSpec& scheme,
                              const ScalarField& phi, const Vec& y0, const ChainAverageSpec& spec,
                              std::uint64_t seed, int workers) {
    if (spec.n_chains < 1) throw InvalidArgument("chain_average: n_chains must be >= 1");
    if (spec.n_batches < 8) throw InvalidArgument("chain_average: n_batches must be >= 8");
    const double frac = spec.burn_in_fraction < 0.0 ? 0.2 : spec.burn_in_fraction;
    if (frac >= 1.0) throw InvalidArgument("chain_average: burn_in_fraction must be < 1");
    const auto burn_in = static_cast<std::size_t>(frac * static_cast<double>(spec.n_steps));
    const auto chains = parallel_map<ChainBatches>(
        static_cast<std::size_t>(spec.n_chains), workers, [&](std::size_t c) {
            Trajectory traj(problem, scheme, y0, spec.n_steps, NoiseStream{seed, c}, spec.thin);
            return run_batches(phi, traj, burn_in, spec.n_batches);
        });

    ErgodicEstimate est;
    est.n_steps = spec.n_steps;
    est.burn_in = burn_in;
    est.n_batches = spec.n_batches;
    est.seed = seed;
    est.n_chains = spec.n_chains;
    for (const auto& c : chains) {
        if (c.diverged) {
            est.diverged = true;
            est.divergence_step = c.divergence_step;
            est.phi_mean = kNaN;
            est.std_error = kNaN;
            return est;
        }
    }
    const double center = chains.front().mean;
    double dsum = 0.0;
    std::vector<double> pooled;
    for (const auto& c : chains) {
        dsum += c.mean - center;
        est.n_samples += c.n_samples;
        pooled.insert(pooled.end(), c.batch_means.begin(), c.batch_means.end());
    }
    est.phi_mean = center + dsum / static_cast<double>(chains.size());
    est.std_error = batch_std_error(pooled, center);
    return est;
}

EnsembleEstimate ensemble_expectation(const SdeProblem& problem, const SchemeSpec& scheme,
                                      const ScalarField& phi, const Vec& x0, double T,
                                      std::size_t n_traj, std::uint64_t seed, int workers) {
    if (!(T >= 0.0)) throw InvalidArgument("ensemble_expectation: T must be >= 0");
    if (n_traj == 0) throw InvalidArgument("ensemble_expectation: n_traj must be >= 1");
    EnsembleEstimate est;
    est.n_traj = n_traj;
    if (T == 0.0) {
        est.mean = phi(x0);
        return est;
    }
    const std::size_t n = steps_for_horizon(T, scheme.tau);
    const auto values = parallel_map<double>(n_traj, workers, [&](std::size_t i) {
        Trajectory traj(problem, scheme, x0, n, NoiseStream{seed, i}, n);
        while (traj.next()) {
        }
        return traj.diverged() ? kNaN : phi(traj.state());
    });
    double sum = 0.0;
    std::size_t good = 0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        sum += v;
        ++good;
    }
    est.n_diverged = n_traj - good;
    est.divergence_fraction = static_cast<double>(est.n_diverged) / static_cast<double>(n_traj);
    if (good == 0) {
        est.mean = kNaN;
        est.std_error = kNaN;
        return est;
    }
    est.mean = sum / static_cast<double>(good);
    if (good > 1) {
        double ss = 0.0;
        for (double v : values) {
            if (std::isnan(v)) continue;
            ss += (v - est.mean) * (v - est.mean);
        }
        est.std_error = std::sqrt(ss / static_cast<double>(good - 1) / static_cast<double>(good));
    }
    return est;
}

bool MomentTrace::sup_before_final() const {
    if (checkpoints.size() < 2 || !std::isfinite(running_sup)) return false;
    return checkpoints.back().second < running_sup;
}

MomentTrace moment_trace(const SdeProblem& problem, const SchemeSpec& scheme, const Vec& y0,
                         double p, std::size_t n_traj, std::size_t n_steps, std::uint64_t seed,
                         int workers) {
    if (!(p > 0.0)) throw InvalidArgument("moment_trace: p must be > 0");
    if (n_traj == 0 || n_steps == 0) {
        throw InvalidArgument("moment_trace: n_traj and n_steps must be >= 1");
    }
    std::vector<std::size_t> marks{0};
    for (std::size_t k = 1; k < n_steps; k *= 2) marks.push_back(k);
    marks.push_back(n_steps);

    const double e = 2.0 * p;
    const auto rows = parallel_map<std::vector<double>>(n_traj, workers, [&](std::size_t i) {
        std::vector<double> row(marks.size(), kInf);
        Trajectory traj(problem, scheme, y0, n_steps, NoiseStream{seed, i});
        row[0] = std::pow(y0.norm(), e);
        for (std::size_t c = 1; c < marks.size(); ++c) {
            while (traj.k() < marks[c] && traj.next()) {
            }
            if (traj.diverged()) break;
            row[c] = std::pow(traj.state().norm(), e);
        }
        return row;
    });

    MomentTrace trace;
    trace.p = p;
    trace.n_traj = n_traj;
    for (const auto& r : rows) {
        if (std::isinf(r.back())) ++trace.n_diverged;
    }
    trace.running_sup = 0.0;
    for (std::size_t c = 0; c < marks.size(); ++c) {
        double s = 0.0;
        for (const auto& r : rows) s += r[c];
        const double mean = s / static_cast<double>(n_traj);
        trace.checkpoints.emplace_back(marks[c], mean);
        trace.running_sup = std::max(trace.running_sup, mean);
        if (std::isnan(mean)) trace.running_sup = mean;
    }
    return trace;
}

DecayFit first_variation_decay(const SdeProblem& problem, const Vec& x, const Vec& v, double q,
                               double T, std::size_t n_traj, std::uint64_t seed,
                               const DecaySettings& settings, int workers) {
    if (!(q > 0.0) || !(T > 0.0) || n_traj == 0 || settings.n_points < 2) {
        throw InvalidArgument("first_variation_decay: need q > 0, T > 0, n_traj >= 1, n_points >= 2");
    }
    if (x.size() != problem.dim_state || v.size() != problem.dim_state) {
        throw InvalidArgument("first_variation_decay: x and v must have dimension d");
    }
    DecayFit fit;
    if (v.norm() == 0.0) {
        fit.skipped = true;
        fit.notice = "zero direction: eta vanishes identically, fit skipped";
        return fit;
    }
    SampleSpec sampler;
    sampler.n_samples = 2000;
    sampler.seed = derive_seed(seed, 0x6d6f6e6f746f6e65ULL);
    const AssumptionReport mono = check_monotonicity(problem, sampler);
    if (mono.violated()) {
        std::ostringstream os;
        os << "warning: monotonicity violated (worst margin " << mono.worst_margin
           << "); decay is not guaranteed";
        fit.notice = os.str();
    }

    const SchemeSpec tem{SchemeKind::TEM, settings.tau_fine, {}};
    tem.validate();
    const std::size_t N = steps_for_horizon(T, settings.tau_fine);
    const int np = settings.n_points;
    std::vector<std::size_t> marks;
    for (int i = 0; i <= np; ++i) {
        marks.push_back(static_cast<std::size_t>(
            std::llround(static_cast<double>(i) * static_cast<double>(N) / np)));
    }
    const int m = problem.dim_noise;
    const auto rows = parallel_map<std::vector<double>>(n_traj, workers, [&](std::size_t id) {
        std::vector<double> row(marks.size(), kNaN);
        const NoiseStream stream{seed, id};
        Vec X = x;
        Vec eta = v;
        std::size_t next = 0;
        for (std::size_t k = 0; k <= N; ++k) {
            while (next < marks.size() && marks[next] == k) {
                row[next] = std::pow(eta.norm(), 2.0 * q);
                ++next;
            }
            if (k == N) break;
            const Vec dW = increment(stream, k, m, settings.tau_fine);
            const Vec eta_next = eta + settings.tau_fine * (problem.drift_jacobian(X) * eta) +
                                 problem.diffusion_deriv[0](X, std::span<const Vec>(&eta, 1)) * dW;
            X = step(problem, tem, X, dW);
            eta = eta_next;
            if (escaped(X) || !eta.allFinite()) break;
        }
        return row;
    });

    std::vector<double> ts;
    std::vector<double> ys;
    for (std::size_t i = 0; i < marks.size(); ++i) {
        double s = 0.0;
        std::size_t cnt = 0;
        for (const auto& r : rows) {
            if (std::isnan(r[i])) continue;
            s += r[i];
            ++cnt;
        }
        if (cnt == 0 || !(s > 0.0) || !std::isfinite(s)) continue;
        const double t = static_cast<double>(marks[i]) * settings.tau_fine;
        const double y = std::log(s / static_cast<double>(cnt));
        fit.series.emplace_back(t, y);
        ts.push_back(t);
        ys.push_back(y);
    }
    if (ts.size() < 2) {
        fit.skipped = true;
        fit.notice += fit.notice.empty() ? "" : "; ";
        fit.notice += "fewer than two finite points, fit skipped";
        return fit;
    }
    const double n = static_cast<double>(ts.size());
    double tm = 0.0;
    double ym = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        tm += ts[i];
        ym += ys[i];
    }
    tm /= n;
    ym /= n;
    double stt = 0.0;
    double sty = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        stt += (ts[i] - tm) * (ts[i] - tm);
        sty += (ts[i] - tm) * (ys[i] - ym);
        syy += (ys[i] - ym) * (ys[i] - ym);
    }
    const double slope = sty / stt;
    fit.lambda_hat = -slope / (2.0 * q);
    fit.r_squared = syy > 0.0 ? std::clamp(sty * sty / (stt * syy), 0.0, 1.0) : 0.0;
    return fit;
}

}  // namespace ergostein
