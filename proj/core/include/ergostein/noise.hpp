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
#include <cstdint>
#include <vector>

#include "ergostein/linalg.hpp"

namespace ergostein {

/// Counter-based Brownian increments.
///
/// Every Gaussian is a pure function of (seed, trajectory_id, step k, substep,
/// coordinate): the counter block is enciphered with Philox-4x32-10 keyed by the
/// seed, the 128-bit output becomes two 53-bit uniforms on (0, 1), and each
/// uniform is mapped through the inverse normal CDF (Wichura's AS 241, relative
/// accuracy about 1e-16). No state is advanced, so streams can be read in any
/// order from any number of threads.
///
/// Counter layout: c0,c1 = k (64 bits); c2 = low 32 bits of trajectory_id;
/// c3 = bits 32..39 of trajectory_id << 24 | substep << 12 | lane, where a lane
/// carries two coordinates. Hence trajectory_id < 2^40, substep < 4096 and
/// m < 8192.
struct NoiseStream {
    std::uint64_t seed = 0;
    std::uint64_t trajectory_id = 0;
};

/// Philox-4x32 with 10 rounds.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Inverse of the standard normal CDF on (0, 1).
double inverse_normal_cdf(double u);

/// Derives an independent seed for a named purpose (e.g. checker sampling).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose);

/// Standard normal for (stream, k, substep, coordinate).
double standard_normal(const NoiseStream& stream, std::uint64_t k, std::uint32_t substep,
                       std::uint32_t coordinate);
/// Uniform on (0, 1) for the same addressing.
double uniform01(const NoiseStream& stream, std::uint64_t k, std::uint32_t substep,
                 std::uint32_t coordinate);

/// delta_k W ~ N(0, tau I_m). Throws InvalidArgument if tau <= 0.
Vec increment(const NoiseStream& stream, std::uint64_t k, int m, double tau);

/// Brownian bridge through the coarse increment: W(s_i) at s_i = i tau / n_sub,
/// i = 0..n_sub, with W(0) = 0 and W(tau) equal to increment(stream, k, m, tau)
/// bit for bit.
struct BrownianPath {
    double tau = 0.0;
    std::vector<double> s;
    std::vector<Vec> w;
};

BrownianPath bridge(const NoiseStream& stream, std::uint64_t k, int n_sub, int m, double tau);

/// n_sub i.i.d. N(0, tau/n_sub I_m) increments: consecutive differences of the
/// bridge, so they sum to the coarse increment up to rounding.
std::vector<Vec> refine(const NoiseStream& stream, std::uint64_t k, int n_sub, int m, double tau);

}  // namespace ergostein
