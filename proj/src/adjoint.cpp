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

#include "mfgame/adjoint.hpp"

#include "mfgame/detail/failure_slot.hpp"
#include "mfgame/errors.hpp"
#include "mfgame/regression.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace mfgame {
namespace {

using detail::FailureSlot;

void check_size(std::span<const double> v, std::size_t n, const char* what) {
    if (v.size() != n) {
        throw ValidationError(std::string("hamiltonian: ") + what + " has dimension " +
                              std::to_string(v.size()) + ", expected " + std::to_string(n));
    }
}

void check_point(const ProblemSpec& problem, const Point& point, std::span<const double> p,
                 std::span<const double> q, std::span<const double> qt) {
    const std::size_t n = problem.dims.state;
    for (Arg a : kAllArgs) check_size(point.get(a), problem.dims.of(a), arg_name(a).data());
    check_size(p, n, "p");
    check_size(q, n, "q");
    check_size(qt, n, "qt");
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// out += J^T v for a row-major (n x d) Jacobian.
void add_transpose_product(const std::vector<double>& jac, std::span<const double> v, std::size_t n,
                           std::size_t d, double scale, std::span<double> out) {
    for (std::size_t r = 0; r < n; ++r) {
        const double vr = scale * v[r];
        if (vr == 0.0) continue;
        for (std::size_t c = 0; c < d; ++c) out[c] += jac[r * d + c] * vr;
    }
}

// Exponent tuples of every monomial in `vars` variables with total degree <= degree.
void monomials(std::size_t vars, int degree, std::vector<int>& current,
               std::vector<std::vector<int>>& out) {
    if (current.size() == vars) {
        out.push_back(current);
        return;
    }
    int used = 0;
    for (int e : current) used += e;
    for (int e = 0; e + used <= degree; ++e) {
        current.push_back(e);
        monomials(vars, degree, current, out);
        current.pop_back();
    }
}

std::vector<std::vector<int>> basis_exponents(std::size_t vars, int degree) {
    std::vector<std::vector<int>> all;
    std::vector<int> cur;
    monomials(vars, degree, cur, all);
    // Constant first, then by increasing total degree.
    std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        int sa = 0, sb = 0;
        for (int e : a) sa += e;
        for (int e : b) sb += e;
        return sa < sb;
    });
    return all;
}

Eigen::MatrixXd lq_generator(const LQSpec& s, double t) {
    return (s.A1.at(t) + s.A2.at(t) - s.h_at(t) * (s.F1.at(t) + s.F2.at(t))).transpose();
}

} // namespace

double hamiltonian(const ProblemSpec& problem, const Point& point, std::span<const double> p,
                   std::span<const double> q, std::span<const double> qt) {
    check_point(problem, point, p, q, qt);
    const std::size_t n = problem.dims.state;
    std::vector<double> b(n), g(n), gt(n);
    problem.drift_b.value(point, b);
    problem.diffusion_g.value(point, g);
    problem.diffusion_gtilde.value(point, gt);
    const double h = problem.observation_h.value(point);
    double H = problem.running_cost_l.value(point);
    for (std::size_t j = 0; j < n; ++j) H += p[j] * (b[j] - gt[j] * h) + q[j] * g[j] + qt[j] * gt[j];
    return H;
}

void hamiltonian_gradient(const ProblemSpec& problem, const Point& point, Arg arg,
                          std::span<const double> p, std::span<const double> q,
                          std::span<const double> qt, std::span<double> out) {
    check_point(problem, point, p, q, qt);
    if (!problem.has_gradients()) {
        throw ValidationError("hamiltonian gradient requires analytic coefficient gradients");
    }
    const std::size_t n = problem.dims.state;
    const std::size_t d = problem.dims.of(arg);
    check_size(out, d, "gradient output");

    std::vector<double> jac(n * d), grad(d), gt(n);
    problem.running_cost_l.gradient(point, arg, out);

    problem.drift_b.jacobian(point, arg, jac);
    add_transpose_product(jac, p, n, d, 1.0, out);

    problem.diffusion_g.jacobian(point, arg, jac);
    add_transpose_product(jac, q, n, d, 1.0, out);

    const double h = problem.observation_h.value(point);
    problem.diffusion_gtilde.jacobian(point, arg, jac);
    add_transpose_product(jac, qt, n, d, 1.0, out);
    add_transpose_product(jac, p, n, d, -h, out);

    problem.diffusion_gtilde.value(point, gt);
    const double pg = dot(p, gt);
    if (pg != 0.0) {
        problem.observation_h.gradient(point, arg, grad);
        for (std::size_t c = 0; c < d; ++c) out[c] -= pg * grad[c];
    }
}

Eigen::VectorXd AdjointSolution::row_mean(const std::vector<double>& v, std::size_t k) const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state_dim));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < state_dim; ++j) {
            m(static_cast<Eigen::Index>(j)) += v[(k * rows + r) * state_dim + j];
        }
    }
    return m / static_cast<double>(rows);
}

AdjointSolution solve_adjoint_lq(const LQSpec& spec, const GridConfig& grid) {
    const ValidationReport report = validate_lq(spec);
    if (!report.passed) throw ValidationError(report.summary());
    if (grid.step_count == 0) throw ValidationError("step count must be positive");

    AdjointSolution sol;
    sol.grid = grid.time_grid(spec.horizon);
    sol.state_dim = spec.n;
    sol.rows = 1;
    sol.deterministic_reduction = true;
    const std::size_t K = sol.grid.steps;
    const std::size_t n = spec.n;
    sol.p.assign((K + 1) * n, 0.0);
    sol.q.assign((K + 1) * n, 0.0);
    sol.qt.assign((K + 1) * n, 0.0);

    Eigen::VectorXd p = spec.M;
    for (std::size_t j = 0; j < n; ++j) sol.p[K * n + j] = p(static_cast<Eigen::Index>(j));

    const double dt = sol.grid.dt();
    for (std::size_t k = K; k-- > 0;) {
        // In reversed time s = T - t the equation reads dp/ds = L p + Q.
        const double mid = 0.5 * (sol.grid.time(k) + sol.grid.time(k + 1));
        const Eigen::MatrixXd L = lq_generator(spec, mid);
        const Eigen::VectorXd Q = spec.Q.at(mid).col(0);
        auto f = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return L * v + Q; };
        const Eigen::VectorXd k1 = f(p);
        const Eigen::VectorXd k2 = f(p + 0.5 * dt * k1);
        const Eigen::VectorXd k3 = f(p + 0.5 * dt * k2);
        const Eigen::VectorXd k4 = f(p + dt * k3);
        p += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        for (std::size_t j = 0; j < n; ++j) sol.p[k * n + j] = p(static_cast<Eigen::Index>(j));
    }
    return sol;
}

std::vector<double> lq_adjoint_residual(const LQSpec& spec, const AdjointSolution& solution) {
    if (!solution.deterministic_reduction) {
        throw ValidationError("residual check needs a deterministic adjoint solution");
    }
    const std::size_t K = solution.grid.steps;
    const std::size_t n = solution.state_dim;
    const double dt = solution.grid.dt();
    std::vector<double> out(K);
    for (std::size_t k = 0; k < K; ++k) {
        const Eigen::Map<const Eigen::VectorXd> pk(solution.p_at(k).data(), static_cast<Eigen::Index>(n));
        const Eigen::Map<const Eigen::VectorXd> pn(solution.p_at(k + 1).data(),
                                                   static_cast<Eigen::Index>(n));
        const double t = 0.5 * (solution.grid.time(k) + solution.grid.time(k + 1));
        const Eigen::VectorXd r = pk - pn - dt * (lq_generator(spec, t) * pn + spec.Q.at(t).col(0));
        out[k] = r.norm();
    }
    return out;
}

std::size_t basis_size(const BasisSpec& basis, std::size_t state_dim) {
    return basis_exponents(state_dim, basis.degree).size() + (basis.include_observation ? 1 : 0);
}

AdjointSolution solve_adjoint_general(const ProblemSpec& problem, const ControlProcess& u1,
                                      const ControlProcess& u2, const TrajectoryBundle& bundle,
                                      const BasisSpec& basis) {
    if (!problem.has_gradients()) {
        throw ValidationError("the regression adjoint solver needs analytic coefficient gradients");
    }
    if (basis.degree < 0) throw ValidationError("basis degree must be non-negative");
    const std::size_t n = problem.dims.state;
    const std::size_t N = bundle.particles;
    const std::size_t K = bundle.steps();
    if (bundle.dims.state != n || bundle.dims.control1 != problem.dims.control1 ||
        bundle.dims.control2 != problem.dims.control2) {
        throw ValidationError("trajectory bundle dimensions do not match the problem");
    }
    if (!bundle.grid.matches(TimeGrid{problem.horizon, K})) {
        throw ValidationError("trajectory bundle horizon does not match the problem");
    }
    if (N < 2) throw ValidationError("regression needs at least two particles");

    AdjointSolution sol;
    sol.grid = bundle.grid;
    sol.state_dim = n;
    sol.rows = N;
    sol.deterministic_reduction = false;
    sol.p.assign((K + 1) * N * n, 0.0);
    sol.q.assign((K + 1) * N * n, 0.0);
    sol.qt.assign((K + 1) * N * n, 0.0);
    sol.condition_numbers.assign(K, 0.0);

    const auto idx = [&](std::size_t k, std::size_t i) { return (k * N + i) * n; };
    const auto sN = static_cast<std::ptrdiff_t>(N);

    // Terminal condition p = m_x + E[m_y].
    {
        const auto xbar = bundle.mean_x(K);
        std::vector<double> my(N * n);
        FailureSlot failure;
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t si = 0; si < sN; ++si) {
            const auto i = static_cast<std::size_t>(si);
            try {
                const auto xi = bundle.x_of(K, i);
                problem.terminal_cost_m.gradient(xi, xbar, Arg::x, {sol.p.data() + idx(K, i), n});
                problem.terminal_cost_m.gradient(xi, xbar, Arg::y, {my.data() + i * n, n});
            } catch (...) {
                failure.record(i, std::current_exception());
            }
        }
        failure.rethrow();
        std::vector<double> my_mean(n);
        ensemble_mean(my, N, n, my_mean);
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = 0; j < n; ++j) sol.p[idx(K, i) + j] += my_mean[j];
        }
    }

    const auto exps = basis_exponents(n, basis.degree);
    const std::size_t B = exps.size() + (basis.include_observation ? 1 : 0);
    const double dt = bundle.grid.dt();
    const std::size_t d1 = problem.dims.control1, d2 = problem.dims.control2;

    Eigen::MatrixXd design(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(B));
    Eigen::MatrixXd targets_q(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(2 * n));
    Eigen::MatrixXd target_p(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(n));
    std::vector<double> hx(N * n), hy(N * n), hy_mean(n);

    for (std::size_t k = K; k-- > 0;) {
        const double t = bundle.grid.time(k);
        const StepControls c = evaluate_controls(bundle, u1, u2, k);
        const auto xbar = bundle.mean_x(k);

#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t si = 0; si < sN; ++si) {
            const auto i = static_cast<std::size_t>(si);
            const auto xi = bundle.x_of(k, i);
            const auto r = static_cast<Eigen::Index>(i);
            for (std::size_t b = 0; b < exps.size(); ++b) {
                double v = 1.0;
                for (std::size_t j = 0; j < n; ++j) {
                    for (int e = 0; e < exps[b][j]; ++e) v *= xi[j];
                }
                design(r, static_cast<Eigen::Index>(b)) = v;
            }
            if (basis.include_observation) {
                design(r, static_cast<Eigen::Index>(B - 1)) = bundle.features(k, i).y_now;
            }
            const double dw = bundle.dw_of(k, i) / dt;
            const double dy = bundle.dy_of(k, i) / dt;
            for (std::size_t j = 0; j < n; ++j) {
                const double pn = sol.p[idx(k + 1, i) + j];
                targets_q(r, static_cast<Eigen::Index>(j)) = pn * dw;
                targets_q(r, static_cast<Eigen::Index>(n + j)) = pn * dy;
            }
        }

        std::ostringstream ctx;
        ctx << "adjoint regression at step " << k << " (t = " << t << ")";
        const LeastSquaresProjector proj(design, basis.max_condition, ctx.str());
        sol.condition_numbers[k] = proj.condition_number();

        const Eigen::MatrixXd qfit = proj.fit(targets_q);
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                sol.q[idx(k, i) + j] = qfit(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                sol.qt[idx(k, i) + j] =
                    qfit(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n + j));
            }
        }

        FailureSlot failure;
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t si = 0; si < sN; ++si) {
            const auto i = static_cast<std::size_t>(si);
            try {
                Point pt;
                pt.t = t;
                pt.x = bundle.x_of(k, i);
                pt.y = xbar;
                pt.u1 = {c.u1.data() + i * d1, d1};
                pt.v1 = c.u1_mean;
                pt.u2 = {c.u2.data() + i * d2, d2};
                pt.v2 = c.u2_mean;
                const std::span<const double> pn{sol.p.data() + idx(k + 1, i), n};
                const std::span<const double> qk{sol.q.data() + idx(k, i), n};
                const std::span<const double> qtk{sol.qt.data() + idx(k, i), n};
                hamiltonian_gradient(problem, pt, Arg::x, pn, qk, qtk, {hx.data() + i * n, n});
                hamiltonian_gradient(problem, pt, Arg::y, pn, qk, qtk, {hy.data() + i * n, n});
            } catch (...) {
                failure.record(i, std::current_exception());
            }
        }
        failure.rethrow();
        ensemble_mean(hy, N, n, hy_mean);

        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double v = sol.p[idx(k + 1, i) + j] + dt * (hx[i * n + j] + hy_mean[j]);
                if (!std::isfinite(v)) {
                    std::ostringstream os;
                    os << "non-finite adjoint driver at step " << k << ", particle " << i;
                    throw NumericalError(os.str());
                }
                target_p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            }
        }
        const Eigen::MatrixXd pfit = proj.fit(target_p);
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                sol.p[idx(k, i) + j] = pfit(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
        }
    }
    return sol;
}

} // namespace mfgame
