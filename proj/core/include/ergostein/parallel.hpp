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

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace ergostein {

/// Worker count used when a call passes workers <= 0. Starts at the number of
/// hardware threads.
int default_workers();
void set_default_workers(int n);

/// Runs body(i) for i in [0, n) on up to `workers` threads. Indices are handed
/// out dynamically; if several bodies throw, the exception of the smallest
/// index is rethrown after all threads have joined.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

/// Ordered map: out[i] = f(i). The result does not depend on `workers`.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, int workers, F&& f) {
    std::vector<std::optional<T>> slots(n);
    parallel_for(n, workers, [&](std::size_t i) { slots[i].emplace(f(i)); });
    std::vector<T> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace ergostein
