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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"

#include "mfgame/adjoint.hpp"
#include "mfgame/errors.hpp"
#include "mfgame/saddle.hpp"

#include <cmath>

using namespace mfgame;

namespace {

double max_abs_error(const AdjointSolution& s, const std::function<double(double)>& exact) {
    double worst = 0.0;
    for (std::size_t k = 0; k <= s.grid.steps; ++k) {
        worst = std::max(worst, std::abs(s.p_at(k)[0] - exact(s.grid.time(k))));
    }
    return worst;
}

/// Random 2-state LQ data with every coefficient family switched on.
LQSpec random_lq(std::uint64_t seed) {
    CounterSequence rng(seed, 0, Stream::validation);
    LQSpec s = LQSpec::zeros(2, 1, 1, 1.0);
    auto fill = [&](TimeMatrix& m, Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd v(r, c);
        for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.uniform(-1.0, 1.0);
        m = TimeMatrix(v);
    };
    for (TimeMatrix* m : {&s.A1, &s.A2, &s.C1, &s.C2, &s.F1, &s.F2}) fill(*m, 2, 2);
    for (TimeMatrix* m : {&s.B11, &s.B12, &s.D11, &s.D12, &s.G11, &s.G12, &s.B21, &s.B22, &s.D21,
                          &s.D22, &s.G21, &s.G22}) {
        fill(*m, 2, 1);
    }
    fill(s.Q, 2, 1);
    fill(s.h, 1, 1);
    s.N11 = oracle::scalar(1.5);
    s.N12 = oracle::scalar(0.3);
    s.N21 = oracle::scalar(-1.2);
    s.N22 = oracle::scalar(-0.4);
    s.M = Eigen::Vector2d(0.5, -0.25);
    s.initial_state = Eigen::Vector2d(0.1, 0.2);
    return s;
}

struct PointData {
    std::vector<double> x, y, u1, v1, u2, v2;
    Point point(double t) const { return Point{t, x, y, u1, v1, u2, v2}; }
    std::vector<double>& of(Arg a) {
        switch (a) {
        case Arg::x: return x;
        case Arg::y: return y;
        case Arg::u1: return u1;
        case Arg::v1: return v1;
        case Arg::u2: return u2;
        case Arg::v2: return v2;
        }
        return x;
    }
};

} // namespace

TEST_CASE("LQ adjoint without running cost or drift is constant") {
    LQSpec s = LQSpec::zeros(2, 1, 1, 1.0);
    s.N11 = oracle::scalar(1.0);
    s.N21 = oracle::scalar(-1.0);
    s.M = Eigen::Vector2d(1.0, -2.0);
    s.initial_state = Eigen::Vector2d::Zero();
    const AdjointSolution a = solve_adjoint_lq(s, GridConfig{25, 2, 1});
    CHECK(a.deterministic_reduction);
    for (std::size_t k = 0; k <= 25; ++k) {
        CHECK(a.p_at(k)[0] == 1.0);
        CHECK(a.p_at(k)[1] == -2.0);
        CHECK(a.q_at(k)[0] == 0.0);
        CHECK(a.qt_at(k)[1] == 0.0);
    }
}

TEST_CASE("LQ adjoint with constant running cost is linear in time") {
    const double q0 = 1.7, m0 = -0.4, T = 2.0;
    LQSpec s = oracle::scalar_lq(T);
    s.Q = oracle::scalar(q0);
    s.M = Eigen::VectorXd::Constant(1, m0);
    const AdjointSolution a = solve_adjoint_lq(s, GridConfig{37, 2, 1});
    CHECK(max_abs_error(a, [&](double t) { return oracle::scalar_adjoint(0.0, q0, m0, T, t); }) < 1e-10);
}

TEST_CASE("LQ adjoint with linear drift is exponential") {
    const double alpha = 0.7, T = 1.0;
    LQSpec s = oracle::scalar_lq(T);
    s.A1 = oracle::scalar(alpha);
    s.M = Eigen::VectorXd::Constant(1, 1.3);
    const AdjointSolution a = solve_adjoint_lq(s, GridConfig{100, 2, 1});
    CHECK(max_abs_error(a, [&](double t) { return oracle::scalar_adjoint(alpha, 0.0, 1.3, T, t); }) < 1e-8);
}

TEST_CASE("observation correction enters the adjoint generator") {
    // Generator A1 + A2 - h (F1 + F2) = 0.2 + 0.1 - 0.5 * (0.4 + 0.2) = 0.
    LQSpec s = oracle::scalar_lq(1.0);
    s.A1 = oracle::scalar(0.2);
    s.A2 = oracle::scalar(0.1);
    s.F1 = oracle::scalar(0.4);
    s.F2 = oracle::scalar(0.2);
    s.h = oracle::scalar(0.5);
    s.Q = oracle::scalar(2.0);
    s.M = Eigen::VectorXd::Constant(1, 1.0);
    const AdjointSolution a = solve_adjoint_lq(s, GridConfig{50, 2, 1});
    CHECK(max_abs_error(a, [](double t) { return 1.0 + 2.0 * (1.0 - t); }) < 1e-10);
}

TEST_CASE("terminal condition and second-order Euler residual") {
    const LQSpec s = oracle::rich_lq();
    const AdjointSolution a = solve_adjoint_lq(s, GridConfig{50, 2, 1});
    CHECK(a.p_at(50)[0] == s.M(0));
    auto worst = [&](std::size_t K) {
        const std::vector<double> r = lq_adjoint_residual(s, solve_adjoint_lq(s, GridConfig{K, 2, 1}));
        return *std::max_element(r.begin(), r.end());
    };
    const double ratio = worst(50) / worst(100);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("invalid LQ data is rejected by the solver") {
    LQSpec s = oracle::scalar_lq();
    s.N12 = oracle::scalar(-2.0);
    CHECK_THROWS_AS(solve_adjoint_lq(s, GridConfig{10, 2, 1}), ValidationError);
}

TEST_CASE("Hamiltonian hand evaluations") {
    PointData d{{0.0}, {0.0}, {0.0}, {0.0}, {0.0}, {0.0}};
    const std::vector<double> zero{0.0};
    const ProblemSpec z = fixture::zero_problem();
    CHECK(hamiltonian(z, d.point(0.3), zero, zero, zero) == 0.0);

    LQSpec s = oracle::scalar_lq();
    s.B11 = oracle::scalar(2.0);
    const ProblemSpec p = lift_lq(s);
    d.u1 = {3.0};
    const std::vector<double> one{1.0};
    CHECK(hamiltonian(p, d.point(0.3), one, zero, zero) == doctest::Approx(15.0).epsilon(1e-14));
}

TEST_CASE("Hamiltonian is affine in the adjoint triple") {
    const ProblemSpec p = lift_lq(random_lq(5));
    CounterSequence rng(3, 0, Stream::validation);
    for (int trial = 0; trial < 20; ++trial) {
        PointData d;
        for (Arg a : kAllArgs) {
            d.of(a).resize(p.dims.of(a));
            for (double& v : d.of(a)) v = rng.normal();
        }
        std::vector<double> pv(2), qv(2), qtv(2);
        for (auto* v : {&pv, &qv, &qtv}) for (double& e : *v) e = rng.normal();
        std::vector<double> p2 = pv, q2 = qv, qt2 = qtv;
        for (auto* v : {&p2, &q2, &qt2}) for (double& e : *v) e *= 2.0;
        const Point pt = d.point(rng.uniform());
        const double lhs = hamiltonian(p, pt, p2, q2, qt2) - 2.0 * hamiltonian(p, pt, pv, qv, qtv);
        CHECK(lhs == doctest::Approx(-p.running_cost_l.value(pt)).epsilon(1e-12));
    }
}

TEST_CASE("Hamiltonian gradient matches central differences") {
    const ProblemSpec p = lift_lq(random_lq(9));
    CounterSequence rng(4, 0, Stream::validation);
    const double eps = 1e-5;
    for (int trial = 0; trial < 10; ++trial) {
        PointData d;
        for (Arg a : kAllArgs) {
            d.of(a).resize(p.dims.of(a));
            for (double& v : d.of(a)) v = rng.normal();
        }
        std::vector<double> pv(2), qv(2), qtv(2);
        for (auto* v : {&pv, &qv, &qtv}) for (double& e : *v) e = rng.normal();
        const double t = rng.uniform();
        for (Arg a : kAllArgs) {
            std::vector<double> g(p.dims.of(a));
            hamiltonian_gradient(p, d.point(t), a, pv, qv, qtv, g);
            for (std::size_t j = 0; j < g.size(); ++j) {
                PointData up = d, dn = d;
                up.of(a)[j] += eps;
                dn.of(a)[j] -= eps;
                const double fd = (hamiltonian(p, up.point(t), pv, qv, qtv) -
                                   hamiltonian(p, dn.point(t), pv, qv, qtv)) / (2.0 * eps);
                CHECK(std::abs(fd - g[j]) <= 1e-5 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

TEST_CASE("regression adjoint with a constant terminal gradient") {
    LQSpec s = oracle::scalar_lq(1.0, 0.3);
    s.M = Eigen::VectorXd::Constant(1, 1.5);
    s.C1 = oracle::scalar(0.0);
    const ProblemSpec p = lift_lq(s);
    const GridConfig g{20, 4000, 17};
    const auto [u1, u2] = fixture::zero_controls(p, g);
    const TrajectoryBundle b = simulate_forward(p, u1, u2, g);
    const AdjointSolution a = solve_adjoint_general(p, u1, u2, b);
    CHECK_FALSE(a.deterministic_reduction);
    const double dt = b.grid.dt();
    const double reg_se = 1.5 / std::sqrt(dt * static_cast<double>(b.particles));
    for (std::size_t k = 0; k <= 20; ++k) {
        for (std::size_t i = 0; i < b.particles; i += 331) CHECK(a.p_at(k, i)[0] == doctest::Approx(1.5).epsilon(1e-12));
        if (k < 20) {
            CHECK(std::abs(a.mean_q(k)(0)) < 5.0 * reg_se);
            CHECK(std::abs(a.mean_qt(k)(0)) < 5.0 * reg_se);
        }
    }
}

TEST_CASE("regression adjoint matches the LQ solver") {
    const LQSpec s = oracle::rich_lq();
    const ProblemSpec p = lift_lq(s);
    const GridConfig g{100, 10000, 42};
    const AdjointSolution ref = solve_adjoint_lq(s, g);
    const auto [u1, u2] = lq_saddle_controls(s, ref);
    const TrajectoryBundle b = simulate_forward(p, u1, u2, g);
    const AdjointSolution a = solve_adjoint_general(p, u1, u2, b);
    double worst = 0.0;
    for (std::size_t k = 0; k <= 100; ++k) worst = std::max(worst, std::abs(a.mean_p(k)(0) - ref.p_at(k)[0]));
    CHECK(worst < 5e-2);
    CHECK(a.condition_numbers.size() == 100);
}

TEST_CASE("regression recovers the martingale representation of x(T)") {
    // g = 1 and m = x^2 / 2, so p(t) = E[x(T) | F_t] = x(t).
    ProblemSpec p = fixture::zero_problem(1, 1, 1, 1.0, 0.5);
    p.diffusion_g = fixture::constant_vector(1.0);
    p.terminal_cost_m = {[](std::span<const double> x, std::span<const double>) { return 0.5 * x[0] * x[0]; },
                         [](std::span<const double> x, std::span<const double>, Arg a, std::span<double> out) {
                             out[0] = a == Arg::x ? x[0] : 0.0;
                         }};
    const GridConfig g{50, 10000, 23};
    const auto [u1, u2] = fixture::zero_controls(p, g);
    const TrajectoryBundle b = simulate_forward(p, u1, u2, g);
    const AdjointSolution a = solve_adjoint_general(p, u1, u2, b);
    for (std::size_t k : {10u, 25u, 40u}) {
        double sx = 0.0, sp = 0.0, sxx = 0.0, sxp = 0.0;
        const double n = static_cast<double>(b.particles);
        for (std::size_t i = 0; i < b.particles; ++i) {
            const double x = b.x_of(k, i)[0], pv = a.p_at(k, i)[0];
            sx += x;
            sp += pv;
            sxx += x * x;
            sxp += x * pv;
        }
        const double slope = (sxp / n - sx / n * sp / n) / (sxx / n - sx / n * sx / n);
        CHECK(slope == doctest::Approx(1.0).epsilon(0.05));
        // q estimates dp/dW = 1.
        CHECK(a.mean_q(k)(0) == doctest::Approx(1.0).epsilon(0.1));
    }
}

TEST_CASE("collinear regression features raise a numerical error") {
    // x(t) = a + Y(t) makes the state and observation columns identical.
    ProblemSpec p = fixture::zero_problem(1, 1, 1, 1.0, 0.0);
    p.diffusion_gtilde = fixture::constant_vector(1.0);
    const GridConfig g{10, 500, 1};
    const auto [u1, u2] = fixture::zero_controls(p, g);
    const TrajectoryBundle b = simulate_forward(p, u1, u2, g);
    CHECK_THROWS_AS(solve_adjoint_general(p, u1, u2, b), NumericalError);
}
