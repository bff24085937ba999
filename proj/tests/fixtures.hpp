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

#include "mfgame/control.hpp"
#include "mfgame/grid.hpp"
#include "mfgame/model.hpp"

#include <algorithm>
#include <span>

namespace fixture {

using namespace mfgame;

inline void zero_out(std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); }

/// General problem with every coefficient identically zero, gradients included.
inline ProblemSpec zero_problem(std::size_t n = 1, std::size_t k1 = 1, std::size_t k2 = 1,
                                double T = 1.0, double a = 0.0) {
    ProblemSpec p;
    p.dims = Dimensions{n, k1, k2};
    p.horizon = T;
    p.initial_state = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), a);
    auto vzero = [](const Point&, std::span<double> out) { zero_out(out); };
    auto vjac = [](const Point&, Arg, std::span<double> out) { zero_out(out); };
    p.drift_b = {vzero, vjac};
    p.diffusion_g = {vzero, vjac};
    p.diffusion_gtilde = {vzero, vjac};
    p.observation_h = {[](const Point&) { return 0.0; }, vjac};
    p.running_cost_l = {[](const Point&) { return 0.0; }, vjac};
    p.terminal_cost_m = {[](std::span<const double>, std::span<const double>) { return 0.0; },
                         [](std::span<const double>, std::span<const double>, Arg,
                            std::span<double> out) { zero_out(out); }};
    return p;
}

/// Scalar constant for a vector coefficient (state dimension 1).
inline VectorField constant_vector(double c) {
    return {[c](const Point&, std::span<double> out) { out[0] = c; },
            [](const Point&, Arg, std::span<double> out) { zero_out(out); }};
}

inline ScalarField constant_scalar(double c) {
    return {[c](const Point&) { return c; }, [](const Point&, Arg, std::span<double> out) { zero_out(out); }};
}

/// Scalar linear drift alpha x + beta y.
inline VectorField linear_drift(double alpha, double beta = 0.0) {
    return {[alpha, beta](const Point& p, std::span<double> out) { out[0] = alpha * p.x[0] + beta * p.y[0]; },
            [alpha, beta](const Point&, Arg a, std::span<double> out) {
                zero_out(out);
                if (a == Arg::x) out[0] = alpha;
                if (a == Arg::y) out[0] = beta;
            }};
}

/// Scalar multiplicative noise sigma x.
inline VectorField multiplicative(double sigma) {
    return {[sigma](const Point& p, std::span<double> out) { out[0] = sigma * p.x[0]; },
            [sigma](const Point&, Arg a, std::span<double> out) {
                zero_out(out);
                if (a == Arg::x) out[0] = sigma;
            }};
}

inline std::pair<ControlProcess, ControlProcess> zero_controls(const ProblemSpec& p, const GridConfig& g) {
    const TimeGrid tg = g.time_grid(p.horizon);
    return {ControlProcess::zero(Player::one, tg, p.dims.control1),
            ControlProcess::zero(Player::two, tg, p.dims.control2)};
}

inline ControlProcess constant_control(Player player, const TimeGrid& tg, double c, std::size_t dim = 1) {
    return ControlProcess::deterministic(
        player, tg, Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(tg.steps), static_cast<Eigen::Index>(dim), c));
}

} // namespace fixture
