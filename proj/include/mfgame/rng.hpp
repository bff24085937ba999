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

#include <array>
#include <cstddef>
#include <cstdint>
#include <utility>

namespace mfgame {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: the
/// output is a pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Substream tags. Distinct tags never share a counter value.
enum class Stream : std::uint32_t {
    brownian_w = 1,
    observation_y = 2,
    perturbation = 3,
    validation = 4,
};

/// Standard normal variate for (seed, id, index, stream), Box-Muller on one
/// Philox block.
double counter_normal(std::uint64_t seed, std::uint64_t id, std::uint64_t index, Stream stream);

/// Uniform variate in [0, 1) with 53 random bits.
double counter_uniform(std::uint64_t seed, std::uint64_t id, std::uint64_t index, Stream stream);

/// The (W, Y) pair of standard normals driving particle `particle_id` over
/// step `step`.
inline std::pair<double, double> rng_stream(std::uint64_t seed, std::uint64_t particle_id,
                                            std::uint64_t step) {
    return {counter_normal(seed, particle_id, step, Stream::brownian_w),
            counter_normal(seed, particle_id, step, Stream::observation_y)};
}

/// Sequential view of a counter-based substream, for small generators
/// (validation sample points, perturbation directions).
class CounterSequence {
public:
    CounterSequence(std::uint64_t seed, std::uint64_t id, Stream stream)
        : seed_(seed), id_(id), stream_(stream) {}

    double uniform() { return counter_uniform(seed_, id_, index_++, stream_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() { return counter_normal(seed_, id_, index_++, stream_); }
    std::size_t below(std::size_t bound) {
        auto v = static_cast<std::size_t>(uniform() * static_cast<double>(bound));
        return v < bound ? v : bound - 1;
    }

private:
    std::uint64_t seed_;
    std::uint64_t id_;
    Stream stream_;
    std::uint64_t index_ = 0;
};

} // namespace mfgame
