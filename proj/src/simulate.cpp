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

#include "mfgame/simulate.hpp"

#include "mfgame/detail/failure_slot.hpp"
#include "mfgame/errors.hpp"
#include "mfgame/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mfgame {
namespace {

constexpr double kMaxLogDensity = 700.0;

using detail::FailureSlot;

void check_inputs(const ProblemSpec& problem, const ControlProcess& u1, const ControlProcess& u2,
                  const GridConfig& grid) {
    if (grid.step_count == 0) throw ValidationError("step count must be positive");
    if (grid.particle_count < 2) throw ValidationError("particle count must be at least 2");
    if (!(problem.horizon > 0.0)) throw ValidationError("horizon must be positive");
    const TimeGrid tg = grid.time_grid(problem.horizon);
    if (u1.player() != Player::one || u2.player() != Player::two) {
        throw ValidationError("controls must be given as (player 1, player 2)");
    }
    if (!u1.grid().matches(tg) || !u2.grid().matches(tg)) {
        throw ValidationError("control grid incompatible with the simulation grid (" +
                              std::to_string(tg.steps) + " steps on [0, " +
                              std::to_string(tg.horizon) + "])");
    }
    if (u1.dim() != problem.dims.control1 || u2.dim() != problem.dims.control2) {
        throw ValidationError("control dimensions do not match the problem");
    }
    if (static_cast<std::size_t>(problem.initial_state.size()) != problem.dims.state) {
        throw ValidationError("initial state length does not match the state dimension");
    }
}

std::string abort_message(const char* what, std::size_t step, std::size_t particle) {
    std::ostringstream os;
    os << what << " at step " << step << ", particle " << particle;
    return os.str();
}

struct Recorder final : EnsembleObserver {
    TrajectoryBundle& b;
    explicit Recorder(TrajectoryBundle& bundle) : b(bundle) {}

    void store(const EnsembleView& v) {
        const std::size_t k = v.step;
        const std::size_t N = b.particles;
        const std::size_t n = b.dims.state;
        std::copy(v.x.begin(), v.x.end(), b.x.begin() + static_cast<std::ptrdiff_t>(k * N * n));
        std::copy(v.y.begin(), v.y.end(), b.y.begin() + static_cast<std::ptrdiff_t>(k * N));
        std::copy(v.y_running_mean.begin(), v.y_running_mean.end(),
                  b.y_running_mean.begin() + static_cast<std::ptrdiff_t>(k * N));
        std::copy(v.x_mean.begin(), v.x_mean.end(), b.x_mean.begin() + static_cast<std::ptrdiff_t>(k * n));
    }
    void on_step(const EnsembleView& v) override { store(v); }
    void on_terminal(const EnsembleView& v) override { store(v); }
    void on_increments(std::size_t k, std::span<const double> dw, std::span<const double> dy) override {
        const auto off = static_cast<std::ptrdiff_t>(k * b.particles);
        std::copy(dw.begin(), dw.end(), b.dw.begin() + off);
        std::copy(dy.begin(), dy.end(), b.dy.begin() + off);
    }
};

} // namespace

void set_thread_count(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

Point EnsembleView::point(std::size_t i) const {
    Point p;
    p.t = t;
    p.x = x_of(i);
    p.y = x_mean;
    if (!u1.empty()) p.u1 = u1.subspan(i * dims.control1, dims.control1);
    p.v1 = u1_mean;
    if (!u2.empty()) p.u2 = u2.subspan(i * dims.control2, dims.control2);
    p.v2 = u2_mean;
    return p;
}

void ensemble_mean(std::span<const double> rows, std::size_t particles, std::size_t dim,
                   std::span<double> out) {
    if (out.size() < dim || rows.size() < particles * dim) {
        throw ValidationError("ensemble_mean: buffer too small");
    }
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(dim), 0.0);
    for (std::size_t i = 0; i < particles; ++i) {
        for (std::size_t j = 0; j < dim; ++j) out[j] += rows[i * dim + j];
    }
    for (std::size_t j = 0; j < dim; ++j) out[j] /= static_cast<double>(particles);
}

bool density_step(double& z, double& log_z, double h, double dy, double dt) {
    const double incr = h * dy - 0.5 * h * h * dt;
    z *= std::exp(incr);
    log_z += incr;
    return std::abs(log_z) <= kMaxLogDensity && z > 0.0 && std::isfinite(z);
}

void run_ensemble(const ProblemSpec& problem, const ControlProcess& c1, const ControlProcess& c2,
                  const GridConfig& grid, EnsembleObserver& observer) {
    check_inputs(problem, c1, c2, grid);
    const TimeGrid tg = grid.time_grid(problem.horizon);
    const std::size_t K = tg.steps;
    const std::size_t N = grid.particle_count;
    const Dimensions dims = problem.dims;
    const std::size_t n = dims.state, k1 = dims.control1, k2 = dims.control2;
    const double dt = tg.dt();
    const double sqrt_dt = std::sqrt(dt);
    const auto signed_n = static_cast<std::ptrdiff_t>(N);

    std::vector<double> x(N * n), z(N, 1.0), log_z(N, 0.0), y(N, 0.0), y_sum(N, 0.0),
        y_bar(N, 0.0), u1(N * k1), u2(N * k2), dw(N), dy(N);
    std::vector<double> x_mean(n), u1_mean(k1), u2_mean(k2);
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < n; ++j) x[i * n + j] = problem.initial_state(static_cast<Eigen::Index>(j));
    }

    EnsembleView view;
    view.particles = N;
    view.dims = dims;
    view.x = x;
    view.x_mean = x_mean;
    view.u1_mean = u1_mean;
    view.u2_mean = u2_mean;
    view.z = z;
    view.y = y;
    view.y_running_mean = y_bar;

    for (std::size_t k = 0; k < K; ++k) {
        const double t = tg.time(k);

#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t si = 0; si < signed_n; ++si) {
            const auto i = static_cast<std::size_t>(si);
            y_bar[i] = k == 0 ? 0.0 : y_sum[i] / static_cast<double>(k);
            const ObservationFeatures obs{y[i], y_bar[i]};
            c1.evaluate(k, obs, std::span<double>(u1).subspan(i * k1, k1));
            c2.evaluate(k, obs, std::span<double>(u2).subspan(i * k2, k2));
        }
        ensemble_mean(x, N, n, x_mean);
        ensemble_mean(u1, N, k1, u1_mean);
        ensemble_mean(u2, N, k2, u2_mean);

        view.step = k;
        view.t = t;
        view.u1 = u1;
        view.u2 = u2;
        observer.on_step(view);

        FailureSlot failure;
#pragma omp parallel
        {
            std::vector<double> b(n), g(n), gt(n);
#pragma omp for schedule(static)
            for (std::ptrdiff_t si = 0; si < signed_n; ++si) {
                const auto i = static_cast<std::size_t>(si);
                try {
                    const auto [xi_w, xi_y] = rng_stream(grid.seed, i, k);
                    dw[i] = sqrt_dt * xi_w;
                    dy[i] = sqrt_dt * xi_y;
                    const Point p = view.point(i);
                    problem.drift_b.value(p, b);
                    problem.diffusion_g.value(p, g);
                    problem.diffusion_gtilde.value(p, gt);
                    const double h = problem.observation_h.value(p);
                    bool finite = std::isfinite(h);
                    for (std::size_t j = 0; j < n; ++j) {
                        double& xj = x[i * n + j];
                        xj += (b[j] - gt[j] * h) * dt + g[j] * dw[i] + gt[j] * dy[i];
                        finite = finite && std::isfinite(xj);
                    }
                    if (!finite) {
                        throw NumericalError(abort_message("non-finite state", k + 1, i));
                    }
                    if (!density_step(z[i], log_z[i], h, dy[i], dt)) {
                        throw NumericalError(
                            abort_message("density overflow (|log Z| > 700); use a smaller dt "
                                          "or a bounded observation drift h",
                                          k + 1, i));
                    }
                    y_sum[i] += y[i];
                    y[i] += dy[i];
                } catch (...) {
                    failure.record(i, std::current_exception());
                }
            }
        }
        failure.rethrow();
        observer.on_increments(k, dw, dy);
    }

    for (std::size_t i = 0; i < N; ++i) y_bar[i] = y_sum[i] / static_cast<double>(K);
    ensemble_mean(x, N, n, x_mean);
    view.step = K;
    view.t = tg.time(K);
    view.u1 = {};
    view.u2 = {};
    std::fill(u1_mean.begin(), u1_mean.end(), 0.0);
    std::fill(u2_mean.begin(), u2_mean.end(), 0.0);
    observer.on_terminal(view);
}

TrajectoryBundle simulate_forward(const ProblemSpec& problem, const ControlProcess& u1,
                                  const ControlProcess& u2, const GridConfig& grid) {
    TrajectoryBundle b;
    b.grid = grid.time_grid(problem.horizon);
    b.particles = grid.particle_count;
    b.dims = problem.dims;
    b.seed = grid.seed;
    const std::size_t K = grid.step_count, N = grid.particle_count, n = problem.dims.state;
    b.x.resize((K + 1) * N * n);
    b.y.resize((K + 1) * N);
    b.y_running_mean.resize((K + 1) * N);
    b.dw.resize(K * N);
    b.dy.resize(K * N);
    b.x_mean.resize((K + 1) * n);
    b.z.assign((K + 1) * N, 1.0);
    b.z_mean.assign(K + 1, 1.0);
    Recorder rec(b);
    run_ensemble(problem, u1, u2, grid, rec);
    return b;
}

StepControls evaluate_controls(const TrajectoryBundle& bundle, const ControlProcess& u1,
                               const ControlProcess& u2, std::size_t step) {
    const std::size_t N = bundle.particles;
    const std::size_t k1 = u1.dim(), k2 = u2.dim();
    StepControls out;
    out.u1.resize(N * k1);
    out.u2.resize(N * k2);
    out.u1_mean.resize(k1);
    out.u2_mean.resize(k2);
    for (std::size_t i = 0; i < N; ++i) {
        const ObservationFeatures obs = bundle.features(step, i);
        u1.evaluate(step, obs, std::span<double>(out.u1).subspan(i * k1, k1));
        u2.evaluate(step, obs, std::span<double>(out.u2).subspan(i * k2, k2));
    }
    ensemble_mean(out.u1, N, k1, out.u1_mean);
    ensemble_mean(out.u2, N, k2, out.u2_mean);
    return out;
}

TrajectoryBundle simulate_density(const ProblemSpec& problem, const ControlProcess& u1,
                                  const ControlProcess& u2, TrajectoryBundle b) {
    const std::size_t K = b.steps(), N = b.particles;
    if (b.x.size() != (K + 1) * N * b.dims.state || b.dy.size() != K * N) {
        throw ValidationError("bundle is missing state paths or Y increments");
    }
    if (!u1.grid().matches(b.grid) || !u2.grid().matches(b.grid)) {
        throw ValidationError("control grid incompatible with the bundle grid");
    }
    const double dt = b.grid.dt();
    std::vector<double> log_z(N, 0.0), z(N, 1.0);
    b.z.assign((K + 1) * N, 1.0);
    b.z_mean.assign(K + 1, 1.0);
    for (std::size_t k = 0; k < K; ++k) {
        const StepControls c = evaluate_controls(b, u1, u2, k);
        for (std::size_t i = 0; i < N; ++i) {
            Point p;
            p.t = b.grid.time(k);
            p.x = b.x_of(k, i);
            p.y = b.mean_x(k);
            p.u1 = std::span<const double>(c.u1).subspan(i * u1.dim(), u1.dim());
            p.v1 = c.u1_mean;
            p.u2 = std::span<const double>(c.u2).subspan(i * u2.dim(), u2.dim());
            p.v2 = c.u2_mean;
            const double h = problem.observation_h.value(p);
            if (!density_step(z[i], log_z[i], h, b.dy_of(k, i), dt)) {
                throw NumericalError(abort_message(
                    "density overflow (|log Z| > 700); use a smaller dt or a bounded observation drift h",
                    k + 1, i));
            }
            b.z[(k + 1) * N + i] = z[i];
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < N; ++i) acc += z[i];
        b.z_mean[k + 1] = acc / static_cast<double>(N);
    }
    b.has_density = true;
    return b;
}

double TrajectoryBundle::x_standard_error(std::size_t k, std::size_t j) const {
    const std::size_t n = dims.state;
    const double mean = x_mean[k * n + j];
    double ss = 0.0;
    for (std::size_t i = 0; i < particles; ++i) {
        const double d = x[(k * particles + i) * n + j] - mean;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(particles - 1) / static_cast<double>(particles));
}

double TrajectoryBundle::z_standard_error(std::size_t k) const {
    const double mean = z_mean[k];
    double ss = 0.0;
    for (std::size_t i = 0; i < particles; ++i) {
        const double d = z[k * particles + i] - mean;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(particles - 1) / static_cast<double>(particles));
}

} // namespace mfgame
