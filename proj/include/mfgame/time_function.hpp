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

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace mfgame {

/// A matrix-valued function of time that is either constant or
/// piecewise-constant (right-continuous) on a table of breakpoints.
///
/// For a table with breakpoints t_0 = 0 < t_1 < ... the value on
/// [t_j, t_{j+1}) is values[j]; the last value extends to +inf.
class TimeMatrix {
public:
    TimeMatrix() = default;
    explicit TimeMatrix(Eigen::MatrixXd constant);
    TimeMatrix(std::vector<double> times, std::vector<Eigen::MatrixXd> values);

    static TimeMatrix zeros(Eigen::Index rows, Eigen::Index cols);

    const Eigen::MatrixXd& at(double t) const;

    Eigen::Index rows() const { return values_.empty() ? 0 : values_.front().rows(); }
    Eigen::Index cols() const { return values_.empty() ? 0 : values_.front().cols(); }
    bool is_constant() const { return times_.size() <= 1; }
    bool empty() const { return values_.empty(); }

    /// Breakpoints (a single 0 for constants).
    const std::vector<double>& times() const { return times_; }
    const std::vector<Eigen::MatrixXd>& values() const { return values_; }

    /// Largest absolute entry over all pieces; +inf if any entry is not finite.
    double max_abs() const;
    bool all_finite() const;

private:
    std::vector<double> times_;
    std::vector<Eigen::MatrixXd> values_;
};

/// Sorted union of the breakpoints of several time functions.
std::vector<double> merged_breakpoints(std::initializer_list<const TimeMatrix*> parts);

} // namespace mfgame
