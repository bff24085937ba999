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

#include "mfgame/time_function.hpp"

#include "mfgame/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfgame {

TimeMatrix::TimeMatrix(Eigen::MatrixXd constant) : times_{0.0}, values_{std::move(constant)} {}

TimeMatrix::TimeMatrix(std::vector<double> times, std::vector<Eigen::MatrixXd> values)
    : times_(std::move(times)), values_(std::move(values)) {
    if (times_.empty() || times_.size() != values_.size()) {
        throw ValidationError("time table needs equally many times and values (got " +
                              std::to_string(times_.size()) + " times, " +
                              std::to_string(values_.size()) + " values)");
    }
    if (times_.front() != 0.0) {
        throw ValidationError("time table must start at t = 0");
    }
    for (std::size_t j = 1; j < times_.size(); ++j) {
        if (!(times_[j] > times_[j - 1])) {
            throw ValidationError("time table breakpoints must be strictly increasing");
        }
        if (values_[j].rows() != values_[0].rows() || values_[j].cols() != values_[0].cols()) {
            throw ValidationError("time table values must share one shape");
        }
    }
}

TimeMatrix TimeMatrix::zeros(Eigen::Index rows, Eigen::Index cols) {
    return TimeMatrix(Eigen::MatrixXd::Zero(rows, cols));
}

const Eigen::MatrixXd& TimeMatrix::at(double t) const {
    if (times_.size() == 1) {
        return values_.front();
    }
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t idx = (it == times_.begin()) ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
    return values_[idx];
}

double TimeMatrix::max_abs() const {
    double out = 0.0;
    for (const auto& v : values_) {
        if (!v.allFinite()) {
            return std::numeric_limits<double>::infinity();
        }
        if (v.size() > 0) {
            out = std::max(out, v.cwiseAbs().maxCoeff());
        }
    }
    return out;
}

bool TimeMatrix::all_finite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](const Eigen::MatrixXd& v) { return v.allFinite(); });
}

std::vector<double> merged_breakpoints(std::initializer_list<const TimeMatrix*> parts) {
    std::vector<double> out;
    for (const TimeMatrix* p : parts) {
        out.insert(out.end(), p->times().begin(), p->times().end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.empty()) {
        out.push_back(0.0);
    }
    return out;
}

} // namespace mfgame
