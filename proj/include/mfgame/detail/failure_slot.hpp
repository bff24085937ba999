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

#include <cstddef>
#include <exception>
#include <limits>
#include <mutex>

namespace mfgame::detail {

// First failure in a parallel loop, kept by lowest particle id so the
// reported diagnostic does not depend on the thread schedule.
class FailureSlot {
public:
    void record(std::size_t particle, std::exception_ptr error) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (!error_ || particle < particle_) {
            particle_ = particle;
            error_ = std::move(error);
        }
    }
    void rethrow() const {
        if (error_) std::rethrow_exception(error_);
    }

private:
    std::mutex mutex_;
    std::size_t particle_ = std::numeric_limits<std::size_t>::max();
    std::exception_ptr error_;
};

} // namespace mfgame::detail
