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

#include "mfgame/regression.hpp"

#include "mfgame/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace mfgame {

LeastSquaresProjector::LeastSquaresProjector(const Eigen::MatrixXd& design, double max_condition,
                                             const std::string& context) {
    const Eigen::Index rows = design.rows();
    if (rows == 0 || design.cols() == 0) {
        throw NumericalError(context + ": empty regression design");
    }
    std::vector<Eigen::Index> keep;
    std::vector<double> means, scales;
    for (Eigen::Index c = 1; c < design.cols(); ++c) {
        const double mean = design.col(c).mean();
        const double sd = std::sqrt((design.col(c).array() - mean).square().mean());
        if (!std::isfinite(mean) || !std::isfinite(sd)) {
            throw NumericalError(context + ": non-finite regression feature");
        }
        if (sd > 1e-12 * std::max(1.0, std::abs(mean))) {
            keep.push_back(c);
            means.push_back(mean);
            scales.push_back(sd);
        }
    }
    active_.resize(rows, static_cast<Eigen::Index>(keep.size()) + 1);
    active_.col(0).setOnes();
    for (std::size_t j = 0; j < keep.size(); ++j) {
        active_.col(static_cast<Eigen::Index>(j) + 1) =
            (design.col(keep[j]).array() - means[j]) / scales[j];
    }
    qr_.compute(active_);
    const Eigen::MatrixXd r =
        qr_.matrixQR().topRows(active_.cols()).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    condition_ = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
    if (!(condition_ <= max_condition)) {
        std::ostringstream os;
        os << context << ": rank-deficient regression (condition number " << condition_
           << " > " << max_condition << "); use a smaller basis";
        throw NumericalError(os.str());
    }
}

Eigen::MatrixXd LeastSquaresProjector::fit(const Eigen::MatrixXd& targets) const {
    const Eigen::MatrixXd coef = qr_.solve(targets);
    return active_ * coef;
}

} // namespace mfgame
