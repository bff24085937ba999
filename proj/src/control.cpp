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

#include "mfgame/control.hpp"

#include "mfgame/errors.hpp"

#include <string>

namespace mfgame {

ControlProcess ControlProcess::deterministic(Player player, TimeGrid grid, Eigen::MatrixXd values) {
    if (static_cast<std::size_t>(values.rows()) != grid.steps || values.cols() == 0) {
        throw ValidationError("deterministic control needs one row per grid interval (" +
                              std::to_string(grid.steps) + "), got " +
                              std::to_string(values.rows()));
    }
    if (!values.allFinite()) throw ValidationError("control values must be finite");
    ControlProcess c(player, grid, static_cast<std::size_t>(values.cols()), Kind::deterministic);
    c.values_ = std::move(values);
    return c;
}

ControlProcess ControlProcess::feedback(Player player, TimeGrid grid,
                                        std::vector<Eigen::MatrixXd> gains) {
    if (gains.size() != grid.steps || gains.empty()) {
        throw ValidationError("feedback control needs one gain matrix per grid interval");
    }
    const Eigen::Index dim = gains.front().rows();
    for (const auto& g : gains) {
        if (g.rows() != dim || g.cols() != static_cast<Eigen::Index>(kFeedbackFeatures) || dim == 0) {
            throw ValidationError("feedback gains must all be dim x 3");
        }
        if (!g.allFinite()) throw ValidationError("feedback gains must be finite");
    }
    ControlProcess c(player, grid, static_cast<std::size_t>(dim), Kind::feedback);
    c.gains_ = std::move(gains);
    return c;
}

ControlProcess ControlProcess::zero(Player player, TimeGrid grid, std::size_t dim) {
    return deterministic(player, grid,
                         Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.steps),
                                               static_cast<Eigen::Index>(dim)));
}

void ControlProcess::evaluate(std::size_t step, const ObservationFeatures& obs,
                              std::span<double> out) const {
    const auto k = static_cast<Eigen::Index>(step);
    if (kind_ == Kind::deterministic) {
        for (std::size_t j = 0; j < dim_; ++j) out[j] = values_(k, static_cast<Eigen::Index>(j));
        return;
    }
    const Eigen::MatrixXd& g = gains_[step];
    for (std::size_t j = 0; j < dim_; ++j) {
        const auto r = static_cast<Eigen::Index>(j);
        out[j] = g(r, 0) + g(r, 1) * obs.y_now + g(r, 2) * obs.y_running_mean;
    }
}

const Eigen::MatrixXd& ControlProcess::values() const {
    if (kind_ != Kind::deterministic) {
        throw ValidationError("feedback control has no deterministic value table");
    }
    return values_;
}

std::vector<Eigen::MatrixXd> ControlProcess::as_gains() const {
    if (kind_ == Kind::feedback) return gains_;
    std::vector<Eigen::MatrixXd> out(grid_.steps);
    for (std::size_t k = 0; k < grid_.steps; ++k) {
        out[k] = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim_), kFeedbackFeatures);
        out[k].col(0) = values_.row(static_cast<Eigen::Index>(k)).transpose();
    }
    return out;
}

ControlProcess ControlProcess::operator+(const ControlProcess& other) const {
    if (other.player_ != player_ || other.dim_ != dim_ || !other.grid_.matches(grid_)) {
        throw ValidationError("cannot add controls of different players, sizes or grids");
    }
    if (kind_ == Kind::deterministic && other.kind_ == Kind::deterministic) {
        return deterministic(player_, grid_, values_ + other.values_);
    }
    auto a = as_gains();
    const auto b = other.as_gains();
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
    return feedback(player_, grid_, std::move(a));
}

ControlProcess ControlProcess::scaled(double factor) const {
    if (kind_ == Kind::deterministic) return deterministic(player_, grid_, factor * values_);
    auto g = gains_;
    for (auto& m : g) m *= factor;
    return feedback(player_, grid_, std::move(g));
}

ControlProcess ControlProcess::shifted(std::size_t step, std::size_t component, double delta) const {
    if (step >= grid_.steps || component >= dim_) {
        throw ValidationError("control shift outside the grid or control dimension");
    }
    ControlProcess c = *this;
    const auto k = static_cast<Eigen::Index>(step);
    const auto j = static_cast<Eigen::Index>(component);
    if (kind_ == Kind::deterministic) c.values_(k, j) += delta;
    else c.gains_[step](j, 0) += delta;
    return c;
}

} // namespace mfgame
