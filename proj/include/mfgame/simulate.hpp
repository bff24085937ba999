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
#include <cstdint>
#include <span>
#include <vector>

namespace mfgame {

/// Caps the worker count of the particle loops. Results do not depend on it.
void set_thread_count(int threads);
int thread_count();

/// Read-only snapshot of the particle ensemble at grid time t_k. All
/// per-particle arrays are row-major (particle-major). Control arrays are
/// empty at the terminal time.
struct EnsembleView {
    std::size_t step = 0;
    double t = 0.0;
    std::size_t particles = 0;
    Dimensions dims;
    std::span<const double> x, u1, u2;
    std::span<const double> x_mean, u1_mean, u2_mean;
    std::span<const double> z;
    std::span<const double> y, y_running_mean;

    std::span<const double> x_of(std::size_t i) const { return x.subspan(i * dims.state, dims.state); }
    /// (t, x_i, mean x, u1_i, mean u1, u2_i, mean u2).
    Point point(std::size_t i) const;
};

/// Receives the ensemble as the forward engine advances.
class EnsembleObserver {
public:
    virtual ~EnsembleObserver() = default;
    /// State at t_k (k < K) with controls evaluated, before advancing.
    virtual void on_step(const EnsembleView&) {}
    /// Brownian increments used to advance from t_k to t_{k+1}.
    virtual void on_increments(std::size_t /*step*/, std::span<const double> /*dw*/,
                               std::span<const double> /*dy*/) {}
    /// State at t_K.
    virtual void on_terminal(const EnsembleView&) {}
};

/// Euler-Maruyama particle simulation of the reference-measure state
///   dx = (b - gtilde h) dt + g dW + gtilde dY
/// with expectations replaced by ensemble means, carrying the density
///   Z_{k+1} = Z_k exp(h dY - h^2 dt / 2)
/// alongside. Means at step k are formed from fully advanced step-k states
/// before any particle moves on. Deterministic in (inputs, seed).
void run_ensemble(const ProblemSpec& problem, const ControlProcess& u1, const ControlProcess& u2,
                  const GridConfig& grid, EnsembleObserver& observer);

/// Stored particle paths on the grid.
struct TrajectoryBundle {
    TimeGrid grid;
    std::size_t particles = 0;
    Dimensions dims;
    std::uint64_t seed = 0;
    bool has_density = false;

    std::vector<double> x;               // (K+1) x N x n
    std::vector<double> z;               // (K+1) x N
    std::vector<double> y;               // (K+1) x N, observation path Y(t_k)
    std::vector<double> y_running_mean;  // (K+1) x N
    std::vector<double> dw;              // K x N
    std::vector<double> dy;              // K x N
    std::vector<double> x_mean;          // (K+1) x n
    std::vector<double> z_mean;          // K+1

    std::size_t steps() const { return grid.steps; }
    std::span<const double> x_at(std::size_t k) const {
        return {x.data() + k * particles * dims.state, particles * dims.state};
    }
    std::span<const double> x_of(std::size_t k, std::size_t i) const {
        return {x.data() + (k * particles + i) * dims.state, dims.state};
    }
    std::span<const double> mean_x(std::size_t k) const {
        return {x_mean.data() + k * dims.state, dims.state};
    }
    double z_of(std::size_t k, std::size_t i) const { return z[k * particles + i]; }
    double dw_of(std::size_t k, std::size_t i) const { return dw[k * particles + i]; }
    double dy_of(std::size_t k, std::size_t i) const { return dy[k * particles + i]; }
    ObservationFeatures features(std::size_t k, std::size_t i) const {
        return {y[k * particles + i], y_running_mean[k * particles + i]};
    }
    /// Standard error of the ensemble mean of component j of x(t_k).
    double x_standard_error(std::size_t k, std::size_t j) const;
    /// Standard error of the ensemble mean of Z(t_k).
    double z_standard_error(std::size_t k) const;
};

/// Control values of both players at step k recomputed from a bundle's
/// observation paths, with their ensemble means.
struct StepControls {
    std::vector<double> u1, u2, u1_mean, u2_mean;
};
StepControls evaluate_controls(const TrajectoryBundle& bundle, const ControlProcess& u1,
                               const ControlProcess& u2, std::size_t step);

/// Simulates the state, observation and Brownian paths. Z is left at 1 and
/// has_density false until simulate_density fills it.
TrajectoryBundle simulate_forward(const ProblemSpec& problem, const ControlProcess& u1,
                                  const ControlProcess& u2, const GridConfig& grid);

/// Fills the density paths of a bundle from its stored states and Y increments.
TrajectoryBundle simulate_density(const ProblemSpec& problem, const ControlProcess& u1,
                                  const ControlProcess& u2, TrajectoryBundle bundle);

/// One exact log-normal step of dZ = Z h dY. Returns false (leaving the
/// values updated) once |log Z| exceeds 700.
bool density_step(double& z, double& log_z, double h, double dy, double dt);

/// Sequential mean over particles (fixed summation order).
void ensemble_mean(std::span<const double> rows, std::size_t particles, std::size_t dim,
                   std::span<double> out);

} // namespace mfgame
