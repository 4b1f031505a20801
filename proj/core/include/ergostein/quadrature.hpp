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

#include <vector>

namespace ergostein {

/// Nodes and weights of a one-dimensional rule.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Hermite rule for the standard normal weight, so that
/// E g(Z) ~ sum_i w_i g(x_i) with sum_i w_i = 1. Golub-Welsch on the Jacobi
/// matrix of the probabilists' Hermite polynomials. n in [1, 64].
QuadratureRule gauss_hermite(int n);

/// 20-point Gauss-Legendre rule mapped to [a, b].
template <class F>
double gauss_legendre(F&& f, double a, double b);

/// Two-point Hermite rule on a cell of width h using values and the first two
/// derivatives at both ends; exact for polynomials of degree 5.
inline double hermite_cell(double h, double g0, double d0, double s0, double g1, double d1,
                           double s1) {
    return 0.5 * h * (g0 + g1) + h * h / 10.0 * (d0 - d1) + h * h * h / 120.0 * (s0 + s1);
}

/// Quintic Hermite interpolation on [0, h] at offset t from the left node.
double quintic_hermite(double h, double t, double g0, double d0, double s0, double g1, double d1,
                       double s1);

}  // namespace ergostein

#include <boost/math/quadrature/gauss.hpp>

namespace ergostein {

template <class F>
double gauss_legendre(F&& f, double a, double b) {
    return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
}

}  // namespace ergostein
