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

#include <string>

namespace mfgame {

/// Least-squares projection onto the span of a design matrix whose first
/// column is the intercept. Non-intercept columns are centred and scaled;
/// columns with (numerically) zero spread are dropped, since they carry no
/// information beyond the intercept. Factor once, fit many targets.
class LeastSquaresProjector {
public:
    /// Throws NumericalError when the condition number of the standardized
    /// design exceeds `max_condition`; `context` names the caller's step.
    LeastSquaresProjector(const Eigen::MatrixXd& design, double max_condition,
                          const std::string& context);

    /// Fitted values (same shape as targets).
    Eigen::MatrixXd fit(const Eigen::MatrixXd& targets) const;

    double condition_number() const { return condition_; }
    Eigen::Index active_columns() const { return active_.cols(); }

private:
    Eigen::MatrixXd active_;  // standardized design actually used
    Eigen::HouseholderQR<Eigen::MatrixXd> qr_;
    double condition_ = 1.0;
};

} // namespace mfgame
