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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mfgame/rng.hpp"

#include <cmath>

using namespace mfgame;

// Known-answer vectors of the Philox4x32-10 reference implementation.
TEST_CASE("philox known answers") {
    using C = std::array<std::uint32_t, 4>;
    using K = std::array<std::uint32_t, 2>;
    CHECK(philox4x32(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are pure functions of their counters") {
    const auto a = rng_stream(42, 17, 123);
    const auto b = rng_stream(42, 17, 123);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
    CHECK(a.first != a.second);
    CHECK(rng_stream(43, 17, 123).first != a.first);
    CHECK(rng_stream(42, 18, 123).first != a.first);
    CHECK(rng_stream(42, 17, 124).first != a.first);
    // Query order does not matter.
    const double late = counter_normal(5, 1, 999, Stream::brownian_w);
    const double early = counter_normal(5, 1, 0, Stream::brownian_w);
    CHECK(counter_normal(5, 1, 0, Stream::brownian_w) == early);
    CHECK(counter_normal(5, 1, 999, Stream::brownian_w) == late);
}

TEST_CASE("normal variates have unit variance and independent substreams") {
    const std::size_t n = 1000000;
    double sw = 0.0, sww = 0.0, sy = 0.0, syy = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto [w, y] = rng_stream(2024, i % 1000, i / 1000);
        sw += w;
        sww += w * w;
        sy += y;
        syy += y * y;
        swy += w * y;
    }
    const double dn = static_cast<double>(n);
    const double mw = sw / dn, my = sy / dn;
    const double vw = sww / dn - mw * mw, vy = syy / dn - my * my;
    CHECK(std::abs(mw) < 4.0 / std::sqrt(dn));
    CHECK(std::abs(my) < 4.0 / std::sqrt(dn));
    CHECK(std::abs(vw - 1.0) < 0.01);
    CHECK(std::abs(vy - 1.0) < 0.01);
    const double rho = (swy / dn - mw * my) / std::sqrt(vw * vy);
    CHECK(std::abs(rho) < 0.01);
}

TEST_CASE("uniform variates lie in the unit interval") {
    CounterSequence seq(1, 2, Stream::perturbation);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = seq.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    CHECK(lo >= 0.0);
    CHECK(hi < 1.0);
    CHECK(sum / 100000.0 == doctest::Approx(0.5).epsilon(0.01));
    for (int i = 0; i < 1000; ++i) CHECK(seq.below(7) < 7);
}
