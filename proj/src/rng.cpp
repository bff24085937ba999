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

#include "mfgame/rng.hpp"

#include <cmath>
#include <numbers>

namespace mfgame {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

std::array<std::uint32_t, 4> block(std::uint64_t seed, std::uint64_t id, std::uint64_t index,
                                   Stream stream) {
    // Counter words: id (64 bits), index (32 bits), stream tag (32 bits).
    return philox4x32({static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32),
                       static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(stream)},
                      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
}

inline std::uint64_t join(std::uint32_t lo, std::uint32_t hi) {
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        philox_round(counter, key);
    }
    return counter;
}

double counter_uniform(std::uint64_t seed, std::uint64_t id, std::uint64_t index, Stream stream) {
    const auto b = block(seed, id, index, stream);
    return static_cast<double>(join(b[0], b[1]) >> 11) * kTwoPow53Inv;
}

double counter_normal(std::uint64_t seed, std::uint64_t id, std::uint64_t index, Stream stream) {
    const auto b = block(seed, id, index, stream);
    // u1 in (0, 1] keeps the log finite.
    const double u1 = static_cast<double>((join(b[0], b[1]) >> 11) + 1) * kTwoPow53Inv;
    const double u2 = static_cast<double>(join(b[2], b[3]) >> 11) * kTwoPow53Inv;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace mfgame
