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

#include "mfgame/saddle.hpp"

#include <cmath>

using namespace mfgame;

namespace {

AdjointSolution constant_adjoint(const TimeGrid& grid, double p) {
    AdjointSolution a;
    a.grid = grid;
    a.state_dim = 1;
    a.rows = 1;
    a.deterministic_reduction = true;
    a.p.assign(grid.steps + 1, p);
    a.q.assign(grid.steps + 1, 0.0);
    a.qt.assign(grid.steps + 1, 0.0);
    return a;
}

void check_constant(const ControlProcess& u, double expected) {
    const Eigen::MatrixXd& v = u.values();
    for (Eigen::Index k = 0; k < v.rows(); ++k) CHECK(v(k, 0) == doctest::Approx(expected).epsilon(1e-14));
}

} // namespace

TEST_CASE("saddle synthesis from a given adjoint") {
    const TimeGrid tg{1.0, 10};
    SUBCASE("zero adjoint gives zero controls") {
        LQSpec s = oracle::scalar_lq();
        s.B11 = oracle::scalar(1.0);
        s.B21 = oracle::scalar(1.0);
        const auto [u1, u2] = lq_saddle_controls(s, constant_adjoint(tg, 0.0));
        check_constant(u1, 0.0);
        check_constant(u2, 0.0);
    }
    SUBCASE("player 1 minimizes") {
        LQSpec s = oracle::scalar_lq();
        s.B11 = oracle::scalar(1.0);
        const auto [u1, u2] = lq_saddle_controls(s, constant_adjoint(tg, 2.0));
        check_constant(u1, -1.0);
        check_constant(u2, 0.0);
    }
    SUBCASE("player 2 maximizes") {
        LQSpec s = oracle::scalar_lq();
        s.B21 = oracle::scalar(1.0);
        const auto [u1, u2] = lq_saddle_controls(s, constant_adjoint(tg, 2.0));
        check_constant(u1, 0.0);
        check_constant(u2, 1.0);
    }
}

TEST_CASE("LQ candidate is stationary") {
    const LQSpec s = oracle::rich_lq();
    const ProblemSpec p = lift_lq(s);
    const GridConfig g{50, 2000, 42};
    const AdjointSolution adj = solve_adjoint_lq(s, g);
    const auto [u1, u2] = lq_saddle_controls(s, adj);
    const ResidualProfile r = stationarity_residual(p, u1, u2, adj, g);
    CHECK(r.times.size() == 50);
    CHECK(r.max() < 1e-6);
}

TEST_CASE("constant shift of player 1 shows up as twice the shift") {
    LQSpec s = oracle::rich_lq();
    s.N12 = oracle::scalar(0.0);
    const ProblemSpec p = lift_lq(s);
    const GridConfig g{40, 1000, 5};
    const AdjointSolution adj = solve_adjoint_lq(s, g);
    const auto [u1, u2] = lq_saddle_controls(s, adj);
    const ControlProcess shifted = u1 + fixture::constant_control(Player::one, g.time_grid(1.0), 0.1);
    const ResidualProfile r = stationarity_residual(p, shifted, u2, adj, g);
    for (double v : r.player1) CHECK(std::abs(v - 0.2) < 1e-8);
    CHECK(r.max2 < 1e-6);
}

TEST_CASE("zero problem has zero residual and trivially passes verification") {
    const ProblemSpec p = fixture::zero_problem();
    const GridConfig g{20, 200, 1};
    const auto [u1, u2] = fixture::zero_controls(p, g);
    const AdjointSolution adj = constant_adjoint(g.time_grid(1.0), 0.0);
    const ResidualProfile r = stationarity_residual(p, u1, u2, adj, g);
    CHECK(r.max() == 0.0);
    PerturbationConfig pc;
    pc.per_player = 6;
    const SaddleReport rep = verify_saddle(p, u1, u2, pc, g);
    CHECK(rep.perturbations.size() == 12);
    for (const auto& c : rep.perturbations) {
        CHECK(c.delta == 0.0);
        CHECK(c.passed);
    }
    CHECK(rep.verdict);
}

TEST_CASE("perturbation directions are reproducible and normalized") {
    const PerturbationConfig pc;
    const TimeGrid tg{2.0, 40};
    for (std::size_t id = 0; id < 6; ++id) {
        const auto [d, desc] = perturbation_direction(pc, Player::one, id, tg, 2);
        const auto [again, desc2] = perturbation_direction(pc, Player::one, id, tg, 2);
        CHECK(desc == desc2);
        CHECK_FALSE(desc.empty());
        if (d.is_deterministic()) {
            CHECK(d.values() == again.values());
            CHECK(d.values().squaredNorm() * tg.dt() == doctest::Approx(1.0).epsilon(1e-12));
        } else {
            // E int |c(t) Y(t)|^2 dt with E Y(t)^2 = t.
            double norm2 = 0.0;
            for (std::size_t k = 0; k < tg.steps; ++k) {
                norm2 += d.gains()[k].col(1).squaredNorm() * tg.time(k) * tg.dt();
            }
            CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    const auto [p1, s1] = perturbation_direction(pc, Player::one, 0, tg, 2);
    const auto [p2, s2] = perturbation_direction(pc, Player::two, 0, tg, 2);
    CHECK(p1.values() != p2.values());
}

TEST_CASE("LQ candidate passes the saddle inequalities") {
    const LQSpec s = oracle::rich_lq();
    const ProblemSpec p = lift_lq(s);
    const GridConfig g{40, 4000, 42};
    const AdjointSolution adj = solve_adjoint_lq(s, g);
    const auto [u1, u2] = lq_saddle_controls(s, adj);
    PerturbationConfig pc;
    pc.per_player = 10;
    const SaddleReport rep = verify_saddle(p, u1, u2, pc, g);
    CHECK(rep.perturbations.size() == 20);
    CHECK(rep.failed_checks() == 0);
    for (const auto& c : rep.perturbations) {
        // Exact quadratic structure: the gap is positive for player 1 and negative for player 2.
        if (c.player == Player::one) CHECK(c.delta > 0.0);
        else CHECK(c.delta < 0.0);
    }
    CHECK(rep.verdict);
}

TEST_CASE("shifted candidate violates a player 1 inequality") {
    const LQSpec s = oracle::rich_lq();
    const ProblemSpec p = lift_lq(s);
    const GridConfig g{40, 4000, 42};
    const AdjointSolution adj = solve_adjoint_lq(s, g);
    const auto [u1, u2] = lq_saddle_controls(s, adj);
    const ControlProcess wrong = u1 + fixture::constant_control(Player::one, g.time_grid(1.0), 1.0);
    PerturbationConfig pc;
    pc.per_player = 10;
    const SaddleReport rep = verify_saddle(p, wrong, u2, pc, g);
    std::size_t violated = 0;
    for (const auto& c : rep.perturbations) {
        if (c.player == Player::one && !c.passed) {
            ++violated;
            CHECK(c.delta < -2.0 * c.delta_se);
        }
    }
    CHECK(violated >= 1);
    CHECK_FALSE(rep.verdict);
}

TEST_CASE("weak formulation checks agree without observation drift") {
    LQSpec s = oracle::rich_lq();
    s.h = oracle::scalar(0.0);
    const ProblemSpec p = lift_lq(s);
    const GridConfig g{20, 1000, 3};
    const AdjointSolution adj = solve_adjoint_lq(s, g);
    const auto [u1, u2] = lq_saddle_controls(s, adj);
    PerturbationConfig pc;
    pc.per_player = 4;
    const SaddleReport a = verify_saddle(p, u1, u2, pc, g, Formulation::strong);
    const SaddleReport b = verify_saddle(p, u1, u2, pc, g, Formulation::weak);
    CHECK(a.candidate.value == b.candidate.value);
    for (std::size_t i = 0; i < a.perturbations.size(); ++i) {
        CHECK(a.perturbations[i].delta == b.perturbations[i].delta);
    }
}

TEST_CASE("convexity probe on the LQ instance") {
    const LQSpec s = oracle::rich_lq();
    const ProblemSpec p = lift_lq(s);
    const GridConfig g{20, 2000, 42};
    const AdjointSolution adj = solve_adjoint_lq(s, g);
    const auto [u1, u2] = lq_saddle_controls(s, adj);
    ConvexityConfig cc;
    cc.triples = 8;
    const ConvexityReport r = convexity_probe(p, u1, u2, g, cc);
    CHECK(r.midpoints.size() == 16);
    for (const auto& m : r.midpoints) {
        if (m.player == Player::one) CHECK(m.defect >= -2.0 * m.se);
        else CHECK(m.defect <= 2.0 * m.se);
        CHECK(m.passed);
    }
    REQUIRE(r.coercivity.size() == 2);
    for (const auto& c : r.coercivity) {
        CHECK(c.passed);
        CHECK(c.ratios.size() == c.lambdas.size());
        if (c.player == Player::one) CHECK(c.curvature > 0.0);
        else CHECK(c.curvature < 0.0);
    }
    CHECK(r.passed);
}

TEST_CASE("convexity probe on a zero-cost problem") {
    const ProblemSpec p = fixture::zero_problem();
    const GridConfig g{10, 100, 1};
    const auto [u1, u2] = fixture::zero_controls(p, g);
    ConvexityConfig cc;
    cc.triples = 5;
    const ConvexityReport r = convexity_probe(p, u1, u2, g, cc);
    CHECK(r.coercivity.empty());
    for (const auto& m : r.midpoints) {
        CHECK(m.defect == 0.0);
        CHECK(m.passed);
    }
}

TEST_CASE("finite-difference cost gradient agrees with the Hamiltonian") {
    LQSpec s = oracle::unit_lq();
    s.B11 = oracle::scalar(1.0);
    s.B21 = oracle::scalar(0.5);
    s.C1 = oracle::scalar(0.4);
    s.initial_state = Eigen::VectorXd::Constant(1, 1.0);
    const ProblemSpec p = lift_lq(s);
    const GridConfig g{20, 4000, 8};
    const AdjointSolution adj = solve_adjoint_lq(s, g);
    const TimeGrid tg = g.time_grid(1.0);
    const ControlProcess u1 = fixture::constant_control(Player::one, tg, 0.3);
    const ControlProcess u2 = fixture::constant_control(Player::two, tg, -0.2);
    for (std::size_t k : {0u, 7u, 19u}) {
        for (Player pl : {Player::one, Player::two}) {
            const GradientBridge b = gradient_bridge(p, u1, u2, adj, g, pl, k);
            CHECK(b.passed);
            CHECK(std::abs(b.finite_difference - b.analytic) <= b.tolerance);
        }
    }
}

TEST_CASE("saddle value is stable under halving the step") {
    const LQSpec s = oracle::rich_lq();
    const ProblemSpec p = lift_lq(s);
    auto value = [&](std::size_t K) {
        const GridConfig g{K, 10000, 42};
        const auto [u1, u2] = lq_saddle_controls(s, solve_adjoint_lq(s, g));
        return cost_strong(p, u1, u2, g);
    };
    const CostEstimate coarse = value(50), fine = value(100);
    const double se = std::hypot(coarse.standard_error, fine.standard_error);
    MESSAGE("J(dt) = " << coarse.value << ", J(dt/2) = " << fine.value << ", combined SE " << se);
    CHECK(std::abs(coarse.value - fine.value) <= 2.0 * se);
}
