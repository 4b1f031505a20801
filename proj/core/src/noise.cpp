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

#include "ergostein/noise.hpp"

#include <cmath>

#include "ergostein/error.hpp"

namespace ergostein {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline std::array<std::uint32_t, 4> counter_block(const NoiseStream& s, std::uint64_t k,
                                                  std::uint32_t substep, std::uint32_t lane) {
    return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32),
            static_cast<std::uint32_t>(s.trajectory_id),
            (static_cast<std::uint32_t>((s.trajectory_id >> 32) & 0xFFu) << 24) |
                ((substep & 0xFFFu) << 12) | (lane & 0xFFFu)};
}

inline std::array<std::uint32_t, 2> key_of(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

// Fills out(0..m-1) with standard normals for (stream, k, substep).
void fill_normals(const NoiseStream& stream, std::uint64_t k, std::uint32_t substep, int m,
                  Vec& out) {
    const auto key = key_of(stream.seed);
    for (int j = 0; j < m; j += 2) {
        const auto r = philox4x32(counter_block(stream, k, substep, static_cast<std::uint32_t>(j / 2)),
                                  key);
        out(j) = inverse_normal_cdf(to_unit(r[0], r[1]));
        if (j + 1 < m) out(j + 1) = inverse_normal_cdf(to_unit(r[2], r[3]));
    }
}

void check_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw InvalidArgument("noise: tau must be positive and finite");
    }
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kPhiloxW0;
            key[1] += kPhiloxW1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

// Wichura, Algorithm AS 241 (PPND16).
double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -HUGE_VAL;
        if (p == 1.0) return HUGE_VAL;
        throw InvalidArgument("inverse_normal_cdf: argument outside [0, 1]");
    }
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r +
                     67265.770927008700853) * r + 45921.953931549871457) * r +
                   13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((r * 5226.495278852545925 + 28729.085735721942674) * r +
                     39307.89580009271061) * r + 21213.794301586595867) * r +
                   5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r +
                    0.24178072517745061177) * r + 1.27045825245236838258) * r +
                  3.64784832476320460504) * r + 5.7694972214606914055) * r +
                4.6303378461565452959) * r + 1.42343711074968357734) /
              (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r +
                    0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                  0.68976733498510000455) * r + 1.6763848301838038494) * r +
                2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r +
                    0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                  0.29656057182850489123) * r + 1.7848265399172913358) * r +
                5.4637849111641143699) * r + 6.6579046435011037772) /
              (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r +
                    1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                  0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) {
    // splitmix64 finalizer over the xor of seed and a purpose tag
    std::uint64_t z = seed ^ (purpose * 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double uniform01(const NoiseStream& stream, std::uint64_t k, std::uint32_t substep,
                 std::uint32_t coordinate) {
    const auto r = philox4x32(counter_block(stream, k, substep, coordinate / 2), key_of(stream.seed));
    return coordinate % 2 == 0 ? to_unit(r[0], r[1]) : to_unit(r[2], r[3]);
}

double standard_normal(const NoiseStream& stream, std::uint64_t k, std::uint32_t substep,
                       std::uint32_t coordinate) {
    return inverse_normal_cdf(uniform01(stream, k, substep, coordinate));
}

Vec increment(const NoiseStream& stream, std::uint64_t k, int m, double tau) {
    check_tau(tau);
    if (m < 1 || m > kMaxDim) throw InvalidArgument("increment: noise dimension out of range");
    Vec z(m);
    fill_normals(stream, k, 0, m, z);
    return std::sqrt(tau) * z;
}

BrownianPath bridge(const NoiseStream& stream, std::uint64_t k, int n_sub, int m, double tau) {
    check_tau(tau);
    if (n_sub < 1) throw InvalidArgument("bridge: n_sub must be >= 1");
    if (n_sub >= 4096) throw InvalidArgument("bridge: n_sub must be < 4096");
    BrownianPath path;
    path.tau = tau;
    path.s.resize(static_cast<std::size_t>(n_sub) + 1);
    path.w.resize(static_cast<std::size_t>(n_sub) + 1);
    const Vec target = increment(stream, k, m, tau);
    const double h = tau / n_sub;
    path.s[0] = 0.0;
    path.w[0] = Vec::Zero(m);
    Vec z(m);
    for (int i = 1; i < n_sub; ++i) {
        const double s_prev = path.s[static_cast<std::size_t>(i - 1)];
        const double remaining = tau - s_prev;
        const Vec& w_prev = path.w[static_cast<std::size_t>(i - 1)];
        fill_normals(stream, k, static_cast<std::uint32_t>(i), m, z);
        const double frac = h / remaining;
        const double sd = std::sqrt(h * (remaining - h) / remaining);
        path.s[static_cast<std::size_t>(i)] = i * h;
        path.w[static_cast<std::size_t>(i)] = w_prev + frac * (target - w_prev) + sd * z;
    }
    path.s[static_cast<std::size_t>(n_sub)] = tau;
    path.w[static_cast<std::size_t>(n_sub)] = target;
    return path;
}

std::vector<Vec> refine(const NoiseStream& stream, std::uint64_t k, int n_sub, int m, double tau) {
    const auto path = bridge(stream, k, n_sub, m, tau);
    std::vector<Vec> inc;
    inc.reserve(static_cast<std::size_t>(n_sub));
    for (std::size_t i = 1; i < path.w.size(); ++i) inc.push_back(path.w[i] - path.w[i - 1]);
    return inc;
}

}  // namespace ergostein
