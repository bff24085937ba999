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
#include "mfgame/simulate.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace mfgame {

/// H = <p, b - gtilde h> + <q, g> + <qt, gtilde> + l at the given point.
double hamiltonian(const ProblemSpec& problem, const Point& point, std::span<const double> p,
                   std::span<const double> q, std::span<const double> qt);

/// Partial derivative of H with respect to one argument, from the analytic
/// coefficient gradients. Writes dim(arg) entries.
void hamiltonian_gradient(const ProblemSpec& problem, const Point& point, Arg arg,
                          std::span<const double> p, std::span<const double> q,
                          std::span<const double> qt, std::span<double> out);

/// Adjoint triple (p, q, qt) on the grid. With the deterministic reduction a
/// single row per time is stored and q = qt = 0; otherwise one row per particle.
struct AdjointSolution {
    TimeGrid grid;
    std::size_t state_dim = 1;
    std::size_t rows = 1;
    bool deterministic_reduction = false;

    std::vector<double> p, q, qt;            // (K+1) x rows x n
    std::vector<double> condition_numbers;   // per backward step (general solver only)

    std::span<const double> p_at(std::size_t k, std::size_t particle = 0) const {
        return row(p, k, particle);
    }
    std::span<const double> q_at(std::size_t k, std::size_t particle = 0) const {
        return row(q, k, particle);
    }
    std::span<const double> qt_at(std::size_t k, std::size_t particle = 0) const {
        return row(qt, k, particle);
    }
    /// Row average at time k (the ensemble mean for per-particle solutions).
    Eigen::VectorXd mean_p(std::size_t k) const { return row_mean(p, k); }
    Eigen::VectorXd mean_q(std::size_t k) const { return row_mean(q, k); }
    Eigen::VectorXd mean_qt(std::size_t k) const { return row_mean(qt, k); }

private:
    std::span<const double> row(const std::vector<double>& v, std::size_t k, std::size_t i) const {
        const std::size_t r = deterministic_reduction ? 0 : i;
        return {v.data() + (k * rows + r) * state_dim, state_dim};
    }
    Eigen::VectorXd row_mean(const std::vector<double>& v, std::size_t k) const;
};

/// For deterministic LQ data the adjoint has q = qt = 0 and p solves
///   dp/dt = -[(A1 + A2 - h (F1 + F2))^T p + Q],  p(T) = M,
/// integrated backward with classical Runge-Kutta; coefficients are frozen
/// at each interval's midpoint.
AdjointSolution solve_adjoint_lq(const LQSpec& spec, const GridConfig& grid);

/// Per-step residual |p_k - p_{k+1} - dt [(A1 + A2 - h(F1 + F2))^T p_{k+1} + Q]| of a
/// deterministic solution against the explicit backward Euler step.
std::vector<double> lq_adjoint_residual(const LQSpec& spec, const AdjointSolution& solution);

/// Regression basis for the Monte Carlo adjoint solver: all monomials of the
/// state up to `degree`, plus the current observation Y(t_k).
struct BasisSpec {
    int degree = 2;
    bool include_observation = true;
    double max_condition = 1e12;
};

/// Number of basis functions (including the constant).
std::size_t basis_size(const BasisSpec& basis, std::size_t state_dim);

/// Backward least-squares Monte Carlo for the adjoint mean-field BSDE:
/// p_K = m_x + E[m_y]; for k = K-1..0, q_k and qt_k project p_{k+1} dW/dt and
/// p_{k+1} dY/dt on the basis, then p_k projects
/// p_{k+1} + dt (H_x + E[H_y]) evaluated with (p_{k+1}, q_k, qt_k).
AdjointSolution solve_adjoint_general(const ProblemSpec& problem, const ControlProcess& u1,
                                      const ControlProcess& u2, const TrajectoryBundle& bundle,
                                      const BasisSpec& basis = {});

} // namespace mfgame
