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
#include "mfgame/grid.hpp"
#include "mfgame/model.hpp"
#include "mfgame/simulate.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mfgame {

/// Open-loop saddle candidate of an LQ game from its deterministic adjoint:
///   2 (N_i1 + N_i2) u_i(t_k) = -(B_i1 + B_i2 - h(t_k) (G_i1 + G_i2))^T p(t_k).
std::pair<ControlProcess, ControlProcess> lq_saddle_controls(const LQSpec& spec,
                                                             const AdjointSolution& adj);

/// Norm of E[H_{u_i} | F^Y_t] + E[H_{v_i}] on the grid, RMS over particles.
/// With a control box the projected-gradient residual |u - P(u -/+ G)| is
/// used instead, so that constrained optima also score zero.
struct ResidualProfile {
    std::vector<double> times;
    std::vector<double> player1, player2;
    double max1 = 0.0, max2 = 0.0;

    double max() const { return max1 > max2 ? max1 : max2; }
};

ResidualProfile stationarity_residual(const ProblemSpec& problem, const ControlProcess& u1,
                                      const ControlProcess& u2, const AdjointSolution& adj,
                                      const GridConfig& grid);

/// Random unilateral deviations used by verify_saddle.
struct PerturbationConfig {
    std::size_t per_player = 20;
    std::uint64_t seed = 7;
    std::vector<double> magnitudes{0.1, 0.5, 1.0};
    std::size_t max_pieces = 8;
    /// Every other perturbation is an observation-feedback direction c(t) Y(t).
    bool include_feedback = true;
    /// A check passes when the paired difference has the right sign up to this many SEs.
    double se_multiplier = 2.0;
};

/// Unit-norm perturbation direction number `id` for a player, as a control
/// process (deterministic or feedback) together with a short description.
std::pair<ControlProcess, std::string> perturbation_direction(const PerturbationConfig& config,
                                                              Player player, std::size_t id,
                                                              const TimeGrid& grid, std::size_t dim);

struct PerturbationResult {
    std::size_t id = 0;
    Player player = Player::one;
    std::string description;
    double magnitude = 0.0;
    CostEstimate cost;
    double delta = 0.0;     ///< J(perturbed) - J(candidate), paired
    double delta_se = 0.0;
    bool passed = true;
};

struct MidpointCheck {
    Player player = Player::one;
    double a = 0.0, b = 0.0;
    double defect = 0.0;  ///< (J(a) + J(b)) / 2 - J((a + b) / 2)
    double se = 0.0;
    bool passed = true;
};

struct CoercivityCheck {
    Player player = Player::one;
    std::vector<double> lambdas;
    std::vector<double> ratios;  ///< J(lambda u) / lambda^2
    double curvature = 0.0;      ///< leading quadratic coefficient in lambda
    double curvature_se = 0.0;
    bool passed = true;
};

struct ConvexityConfig {
    std::size_t triples = 50;
    std::uint64_t seed = 11;
    std::vector<double> lambdas{1.0, 2.0, 4.0, 8.0};
    double se_multiplier = 2.0;
    /// Coercivity probes run when set, or automatically for LQ-derived problems.
    std::optional<bool> coercivity;
};

struct ConvexityReport {
    std::vector<MidpointCheck> midpoints;
    std::vector<CoercivityCheck> coercivity;
    bool passed = true;
};

ConvexityReport convexity_probe(const ProblemSpec& problem, const ControlProcess& u1,
                                const ControlProcess& u2, const GridConfig& grid,
                                const ConvexityConfig& config = {},
                                Formulation formulation = Formulation::strong);

struct SaddleReport {
    CostEstimate candidate;
    std::optional<CostEstimate> candidate_weak;
    Formulation formulation = Formulation::strong;
    std::vector<PerturbationResult> perturbations;
    std::optional<ResidualProfile> residual;
    double residual_tolerance = 1e-6;
    std::optional<ConvexityReport> convexity;
    bool verdict = true;

    std::size_t failed_checks() const;
    bool residual_passed() const { return !residual || residual->max() < residual_tolerance; }
    /// Recomputes the verdict from all attached parts.
    void update_verdict();
};

/// Compares the candidate's cost with random unilateral deviations under
/// common random numbers: player 1 deviations must not lower J and player 2
/// deviations must not raise it, each up to se_multiplier paired SEs.
SaddleReport verify_saddle(const ProblemSpec& problem, const ControlProcess& u1,
                           const ControlProcess& u2, const PerturbationConfig& perturbations,
                           const GridConfig& grid, Formulation formulation = Formulation::strong);

/// Finite-difference derivative of the strong cost with respect to one
/// interval value of a deterministic control, against
///   dt * mean[H_{u_i}(t_k) + E[H_{v_i}(t_k)]]
/// evaluated with the adjoint at t_{k+1}, i.e. the derivative of the
/// discretized cost.
struct GradientBridge {
    double finite_difference = 0.0;
    double finite_difference_se = 0.0;
    double analytic = 0.0;
    double analytic_se = 0.0;
    double tolerance = 0.0;
    bool passed = true;
};

GradientBridge gradient_bridge(const ProblemSpec& problem, const ControlProcess& u1,
                               const ControlProcess& u2, const AdjointSolution& adj,
                               const GridConfig& grid, Player player, std::size_t step,
                               std::size_t component = 0, double epsilon = 0.05);

} // namespace mfgame
