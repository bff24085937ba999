/*
 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>

namespace mfgame {

/// Uniform time grid t_k = k T / K, k = 0..K.
struct TimeGrid {
    double horizon = 1.0;
    std::size_t steps = 1;

    double dt() const { return horizon / static_cast<double>(steps); }
    double time(std::size_t k) const {
        return horizon * static_cast<double>(k) / static_cast<double>(steps);
    }

    bool matches(const TimeGrid& other) const {
        return steps == other.steps &&
               std::abs(horizon - other.horizon) <= 1e-12 * std::max(1.0, std::abs(horizon));
    }
};

/// Discretization and sampling knobs for a Monte Carlo run.
struct GridConfig {
    std::size_t step_count = 1000;
    std::size_t particle_count = 10000;
    std::uint64_t seed = 42;

    TimeGrid time_grid(double horizon) const { return TimeGrid{horizon, step_count}; }
};

} // namespace mfgame
