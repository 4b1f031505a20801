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

#include "ergostein/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "ergostein/error.hpp"

namespace ergostein {

QuadratureRule gauss_hermite(int n) {
    if (n < 1 || n > 64) throw InvalidArgument("gauss_hermite: n must lie in [1, 64]");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        J(k - 1, k) = J(k, k - 1) = std::sqrt(static_cast<double>(k));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rule.nodes[static_cast<std::size_t>(i)] = eig.eigenvalues()(i);
        const double v0 = eig.eigenvectors()(0, i);
        rule.weights[static_cast<std::size_t>(i)] = v0 * v0;
    }
    // Symmetrize: the rule is even, and exact symmetry keeps odd moments at 0.
    for (int i = 0; i < n / 2; ++i) {
        const auto a = static_cast<std::size_t>(i);
        const auto b = static_cast<std::size_t>(n - 1 - i);
        const double x = 0.5 * (rule.nodes[b] - rule.nodes[a]);
        const double w = 0.5 * (rule.weights[a] + rule.weights[b]);
        rule.nodes[a] = -x;
        rule.nodes[b] = x;
        rule.weights[a] = rule.weights[b] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
    for (double& w : rule.weights) w /= total;
    return rule;
}

double quintic_hermite(double h, double t, double g0, double d0, double s0, double g1, double d1,
                       double s1) {
    const double u = t / h;
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double u4 = u3 * u;
    const double u5 = u4 * u;
    const double h00 = 1 - 10 * u3 + 15 * u4 - 6 * u5;
    const double h10 = u - 6 * u3 + 8 * u4 - 3 * u5;
    const double h20 = 0.5 * (u2 - 3 * u3 + 3 * u4 - u5);
    const double h01 = 10 * u3 - 15 * u4 + 6 * u5;
    const double h11 = -4 * u3 + 7 * u4 - 3 * u5;
    const double h21 = 0.5 * (u3 - 2 * u4 + u5);
    return h00 * g0 + h * h10 * d0 + h * h * h20 * s0 + h01 * g1 + h * h11 * d1 +
           h * h * h21 * s1;
}

}  // namespace ergostein
