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
#include <iosfwd>
#include <string>

#include "ergostein_cli/config.hpp"

namespace ergostein::cli {

enum ExitCode : int { kPass = 0, kFail = 1, kInconclusive = 2, kUsage = 3 };

/// Resolved invocation: config with CLI overrides applied.
struct Invocation {
    RunConfig config;
    int workers = 0;
    std::ostream* log = nullptr;  ///< human-readable summary; null for silence
};

int cmd_check_assumptions(const Invocation& inv);
int cmd_simulate(const Invocation& inv);
int cmd_converge(const Invocation& inv);
int cmd_stein_verify(const Invocation& inv);
int cmd_blowup_demo(const Invocation& inv);

}  // namespace ergostein::cli
