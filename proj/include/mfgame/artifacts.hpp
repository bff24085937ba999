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

#include "mfgame/adjoint.hpp"
#include "mfgame/control.hpp"
#include "mfgame/cost.hpp"
#include "mfgame/saddle.hpp"
#include "mfgame/simulate.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

namespace mfgame {

inline constexpr const char* kToolVersion = "0.1.0";

/// Run metadata embedded in every artifact.
struct ArtifactMeta {
    std::string command;
    std::uint64_t seed = 0;
    double dt = 0.0;
    std::size_t particles = 0;
    std::size_t steps = 0;
};

/// 17 significant digits, round-trip exact.
std::string format_double(double v);

/// "# mfgame <version> command=... seed=... dt=... particles=... steps=..."
std::string csv_comment(const ArtifactMeta& meta);
nlohmann::ordered_json meta_json(const ArtifactMeta& meta);

/// Writes bytes exactly; creates parent directories.
void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// `time, particle, x_0..x_{n-1}, Z` for the first `max_particles`
/// particles (all when zero).
std::string trajectory_csv(const TrajectoryBundle& bundle, const ArtifactMeta& meta,
                           std::size_t max_particles);
/// {"t", "x_mean", "Z_mean", "x_se", ...} plus metadata.
nlohmann::ordered_json trajectory_summary(const TrajectoryBundle& bundle, const ArtifactMeta& meta);

nlohmann::ordered_json cost_json(const CostEstimate& cost);

/// `time, p_0.., q_0.., qt_0..`; per-particle solutions are averaged over particles.
std::string adjoint_csv(const AdjointSolution& adj, const ArtifactMeta& meta);
nlohmann::ordered_json adjoint_summary(const AdjointSolution& adj, const ArtifactMeta& meta);

/// `time, u_0..u_{k-1}`, one row per interval start. Deterministic controls only.
std::string control_csv(const ControlProcess& control, const ArtifactMeta& meta);
/// Reads a control CSV; the rows must sit exactly on the grid's interval starts.
ControlProcess parse_control_csv(const std::string& text, Player player, const TimeGrid& grid,
                                 std::size_t dim, const std::string& source);

nlohmann::ordered_json residual_json(const ResidualProfile& r, double tolerance);
nlohmann::ordered_json saddle_json(const SaddleReport& report, const ArtifactMeta& meta);
/// `perturbation_id, player, J, SE, delta, verdict`
std::string saddle_csv(const SaddleReport& report, const ArtifactMeta& meta);

} // namespace mfgame
