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

#include <cstddef>
#include <string_view>
#include <vector>

namespace mfgame {

enum class Formulation { strong, weak };

std::string_view formulation_name(Formulation f);

/// Monte Carlo estimate of the payoff J(u1, u2).
struct CostEstimate {
    double value = 0.0;           ///< running + terminal
    double standard_error = 0.0;  ///< from the per-particle sample variance
    double running = 0.0;
    double terminal = 0.0;
    std::size_t particle_count = 0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    Formulation formulation = Formulation::strong;
};

/// Per-particle contributions; the estimate is their sample mean. Samples
/// from two runs with the same seed are paired (common random numbers).
struct CostSamples {
    std::vector<double> running;
    std::vector<double> terminal;
    double dt = 0.0;
    std::uint64_t seed = 0;
    Formulation formulation = Formulation::strong;

    std::size_t size() const { return running.size(); }
    double total(std::size_t i) const { return running[i] + terminal[i]; }
    CostEstimate estimate() const;
};

/// Left-endpoint quadrature of the running cost plus the terminal cost, per
/// particle. The weak formulation weights l(t_k) by Z(t_k) and m by Z(T);
/// expectations inside l and m are ensemble means under the reference
/// measure in both formulations.
CostSamples cost_samples(const ProblemSpec& problem, const ControlProcess& u1,
                         const ControlProcess& u2, const GridConfig& grid, Formulation formulation);

CostEstimate cost_strong(const ProblemSpec& problem, const ControlProcess& u1,
                         const ControlProcess& u2, const GridConfig& grid);

CostEstimate cost_weak(const ProblemSpec& problem, const ControlProcess& u1,
                       const ControlProcess& u2, const GridConfig& grid);

/// Mean and standard error of a - b over paired samples.
struct PairedDifference {
    double mean = 0.0;
    double standard_error = 0.0;
};
PairedDifference paired_difference(const CostSamples& a, const CostSamples& b);

/// Mean and standard error of an arbitrary linear combination sum_j w_j * samples_j.
PairedDifference combine_samples(const std::vector<const CostSamples*>& samples,
                                 const std::vector<double>& weights);

} // namespace mfgame
