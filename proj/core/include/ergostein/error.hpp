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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ergostein {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on user-supplied parameters was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A coefficient or test function produced NaN/Inf where a finite value is required.
class NonFiniteValue : public Error {
public:
    using Error::Error;
};

/// The implicit step did not converge. Carries the final residual and, when
/// raised from inside a chain, the step index.
class SolverFailure : public Error {
public:
    SolverFailure(const std::string& what, double residual, std::int64_t step = -1)
        : Error(what), residual_(residual), step_(step) {}

    double residual() const noexcept { return residual_; }
    std::int64_t step() const noexcept { return step_; }

private:
    double residual_;
    std::int64_t step_;
};

/// A table-backed function was evaluated outside its tabulated domain.
class DomainEscape : public Error {
public:
    DomainEscape(const std::string& what, double escape_fraction)
        : Error(what), escape_fraction_(escape_fraction) {}

    double escape_fraction() const noexcept { return escape_fraction_; }

private:
    double escape_fraction_;
};

}  // namespace ergostein
