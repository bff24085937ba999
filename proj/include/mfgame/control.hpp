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

#include "mfgame/grid.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace mfgame {

enum class Player { one = 1, two = 2 };

inline int player_index(Player p) { return p == Player::one ? 1 : 2; }

/// Observation features of one particle's Y path at grid time t_k. Both are
/// functions of {Y(t_j) : j <= k} only.
struct ObservationFeatures {
    double y_now = 0.0;           ///< Y(t_k)
    double y_running_mean = 0.0;  ///< (1/t_k) sum_{j<k} Y(t_j) dt, zero at k = 0
};

/// Feature vector used by feedback controls: (1, Y(t_k), running mean of Y).
inline constexpr std::size_t kFeedbackFeatures = 3;

/// Piecewise-constant admissible control of one player on a time grid.
///
/// Deterministic controls hold one value per interval [t_k, t_{k+1}).
/// Feedback controls hold one (dim x 3) gain matrix per interval, applied to
/// the observation features at t_k, so the value at t_k only ever sees Y up
/// to t_k.
class ControlProcess {
public:
    enum class Kind { deterministic, feedback };

    static ControlProcess deterministic(Player player, TimeGrid grid, Eigen::MatrixXd values);
    static ControlProcess feedback(Player player, TimeGrid grid, std::vector<Eigen::MatrixXd> gains);
    static ControlProcess zero(Player player, TimeGrid grid, std::size_t dim);

    Player player() const { return player_; }
    const TimeGrid& grid() const { return grid_; }
    std::size_t dim() const { return dim_; }
    Kind kind() const { return kind_; }
    bool is_deterministic() const { return kind_ == Kind::deterministic; }

    void evaluate(std::size_t step, const ObservationFeatures& obs, std::span<double> out) const;

    /// Rows are intervals, columns are control components. Deterministic only.
    const Eigen::MatrixXd& values() const;
    /// Gain matrices per interval. Feedback only.
    const std::vector<Eigen::MatrixXd>& gains() const { return gains_; }

    /// Pointwise sum of two controls of the same player on the same grid.
    ControlProcess operator+(const ControlProcess& other) const;
    ControlProcess scaled(double factor) const;
    /// Same control with the value on a single interval shifted by `delta`.
    ControlProcess shifted(std::size_t step, std::size_t component, double delta) const;

private:
    ControlProcess(Player p, TimeGrid g, std::size_t dim, Kind k)
        : player_(p), grid_(g), dim_(dim), kind_(k) {}

    std::vector<Eigen::MatrixXd> as_gains() const;

    Player player_;
    TimeGrid grid_;
    std::size_t dim_;
    Kind kind_;
    Eigen::MatrixXd values_;
    std::vector<Eigen::MatrixXd> gains_;
};

} // namespace mfgame
