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

#include "mfgame/cost.hpp"

#include "mfgame/errors.hpp"
#include "mfgame/simulate.hpp"

#include <cmath>

namespace mfgame {
namespace {

class CostAccumulator final : public EnsembleObserver {
public:
    CostAccumulator(const ProblemSpec& problem, Formulation f, double dt, std::size_t particles)
        : problem_(problem), weak_(f == Formulation::weak), dt_(dt),
          running_(particles, 0.0), terminal_(particles, 0.0) {}

    void on_step(const EnsembleView& v) override {
        const auto N = static_cast<std::ptrdiff_t>(v.particles);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t si = 0; si < N; ++si) {
            const auto i = static_cast<std::size_t>(si);
            const double l = problem_.running_cost_l.value(v.point(i));
            running_[i] += (weak_ ? v.z[i] * l : l) * dt_;
        }
    }

    void on_terminal(const EnsembleView& v) override {
        for (std::size_t i = 0; i < v.particles; ++i) {
            const double m = problem_.terminal_cost_m.value(v.x_of(i), v.x_mean);
            terminal_[i] = weak_ ? v.z[i] * m : m;
        }
    }

    std::vector<double> take_running() { return std::move(running_); }
    std::vector<double> take_terminal() { return std::move(terminal_); }

private:
    const ProblemSpec& problem_;
    bool weak_;
    double dt_;
    std::vector<double> running_;
    std::vector<double> terminal_;
};

double sequential_mean(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

// Deviations are taken from the first sample so that identical samples give
// an exact zero.
double standard_error_of(const std::vector<double>& v) {
    const std::size_t N = v.size();
    if (N < 2) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += x - v.front();
    const double shift = acc / static_cast<double>(N);
    double ss = 0.0;
    for (double x : v) {
        const double d = (x - v.front()) - shift;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(N - 1) / static_cast<double>(N));
}

} // namespace

std::string_view formulation_name(Formulation f) {
    return f == Formulation::strong ? "strong" : "weak";
}

CostEstimate CostSamples::estimate() const {
    const std::size_t N = size();
    CostEstimate e;
    e.particle_count = N;
    e.dt = dt;
    e.seed = seed;
    e.formulation = formulation;
    if (N == 0) return e;
    e.running = sequential_mean(running);
    e.terminal = sequential_mean(terminal);
    e.value = e.running + e.terminal;
    std::vector<double> totals(N);
    for (std::size_t i = 0; i < N; ++i) totals[i] = total(i);
    e.standard_error = standard_error_of(totals);
    return e;
}

CostSamples cost_samples(const ProblemSpec& problem, const ControlProcess& u1,
                         const ControlProcess& u2, const GridConfig& grid, Formulation formulation) {
    const double dt = grid.time_grid(problem.horizon).dt();
    CostAccumulator acc(problem, formulation, dt, grid.particle_count);
    run_ensemble(problem, u1, u2, grid, acc);
    CostSamples s;
    s.running = acc.take_running();
    s.terminal = acc.take_terminal();
    s.dt = dt;
    s.seed = grid.seed;
    s.formulation = formulation;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isfinite(s.total(i))) {
            throw NumericalError("non-finite cost contribution from particle " + std::to_string(i));
        }
    }
    return s;
}

CostEstimate cost_strong(const ProblemSpec& problem, const ControlProcess& u1,
                         const ControlProcess& u2, const GridConfig& grid) {
    return cost_samples(problem, u1, u2, grid, Formulation::strong).estimate();
}

CostEstimate cost_weak(const ProblemSpec& problem, const ControlProcess& u1,
                       const ControlProcess& u2, const GridConfig& grid) {
    return cost_samples(problem, u1, u2, grid, Formulation::weak).estimate();
}

PairedDifference combine_samples(const std::vector<const CostSamples*>& samples,
                                 const std::vector<double>& weights) {
    if (samples.empty() || samples.size() != weights.size()) {
        throw ValidationError("combine_samples needs one weight per sample set");
    }
    const std::size_t N = samples.front()->size();
    for (const auto* s : samples) {
        if (s->size() != N) throw ValidationError("paired samples must have equal particle counts");
    }
    std::vector<double> d(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < samples.size(); ++j) d[i] += weights[j] * samples[j]->total(i);
    }
    PairedDifference out;
    out.mean = sequential_mean(d);
    out.standard_error = standard_error_of(d);
    return out;
}

PairedDifference paired_difference(const CostSamples& a, const CostSamples& b) {
    return combine_samples({&a, &b}, {1.0, -1.0});
}

} // namespace mfgame
