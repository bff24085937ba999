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

#include "mfgame/saddle.hpp"

#include "mfgame/detail/failure_slot.hpp"
#include "mfgame/errors.hpp"
#include "mfgame/regression.hpp"
#include "mfgame/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace mfgame {
namespace {

using detail::FailureSlot;

// Relative roundoff allowance on cost comparisons. Paired differences of
// noise-free runs have zero standard error, so the SE band alone would turn
// the last few bits of a sum into a verdict.
constexpr double kRoundoff = 1e-12;

double roundoff_floor(double scale) { return kRoundoff * std::max(1.0, std::abs(scale)); }

void check_adjoint(const ProblemSpec& problem, const AdjointSolution& adj, const GridConfig& grid) {
    if (!adj.grid.matches(grid.time_grid(problem.horizon))) {
        throw ValidationError("adjoint grid incompatible with the problem grid");
    }
    if (adj.state_dim != problem.dims.state) {
        throw ValidationError("adjoint dimension does not match the problem state dimension");
    }
    if (!adj.deterministic_reduction && adj.rows != grid.particle_count) {
        throw ValidationError("per-particle adjoint was computed with a different particle count");
    }
}

// Per-particle G_i = H_u(point_i) + E[H_v] for both players at the steps it is
// asked for. The adjoint is read at t_k or t_{k+1}; q and qt always at t_k.
class GradientObserver final : public EnsembleObserver {
public:
    using Sink = std::function<void(const EnsembleView&, const std::vector<double>&,
                                    const std::vector<double>&)>;

    GradientObserver(const ProblemSpec& problem, const AdjointSolution& adj, bool next_adjoint,
                     std::optional<std::size_t> only_step, Sink sink)
        : problem_(problem), adj_(adj), next_(next_adjoint), only_(only_step),
          sink_(std::move(sink)) {}

    void on_step(const EnsembleView& v) override {
        if (only_ && *only_ != v.step) return;
        const std::size_t N = v.particles;
        const std::size_t d1 = problem_.dims.control1, d2 = problem_.dims.control2;
        g1_.assign(N * d1, 0.0);
        g2_.assign(N * d2, 0.0);
        hv1_.assign(N * d1, 0.0);
        hv2_.assign(N * d2, 0.0);
        const std::size_t kp = next_ ? v.step + 1 : v.step;
        FailureSlot failure;
        const auto sN = static_cast<std::ptrdiff_t>(N);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t si = 0; si < sN; ++si) {
            const auto i = static_cast<std::size_t>(si);
            try {
                const Point pt = v.point(i);
                const auto p = adj_.p_at(kp, i);
                const auto q = adj_.q_at(v.step, i);
                const auto qt = adj_.qt_at(v.step, i);
                hamiltonian_gradient(problem_, pt, Arg::u1, p, q, qt, {g1_.data() + i * d1, d1});
                hamiltonian_gradient(problem_, pt, Arg::v1, p, q, qt, {hv1_.data() + i * d1, d1});
                hamiltonian_gradient(problem_, pt, Arg::u2, p, q, qt, {g2_.data() + i * d2, d2});
                hamiltonian_gradient(problem_, pt, Arg::v2, p, q, qt, {hv2_.data() + i * d2, d2});
            } catch (...) {
                failure.record(i, std::current_exception());
            }
        }
        failure.rethrow();
        add_mean(hv1_, g1_, N, d1);
        add_mean(hv2_, g2_, N, d2);
        sink_(v, g1_, g2_);
    }

private:
    static void add_mean(const std::vector<double>& src, std::vector<double>& dst, std::size_t N,
                         std::size_t d) {
        std::vector<double> m(d);
        ensemble_mean(src, N, d, m);
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t c = 0; c < d; ++c) dst[i * d + c] += m[c];
        }
    }

    const ProblemSpec& problem_;
    const AdjointSolution& adj_;
    bool next_;
    std::optional<std::size_t> only_;
    Sink sink_;
    std::vector<double> g1_, g2_, hv1_, hv2_;
};

// Projection of per-particle values (N x d) on the observation features
// (1, Y(t_k), running mean of Y). Values that agree across particles are
// F^Y-measurable already and are returned unchanged.
std::vector<double> conditional_on_observation(const EnsembleView& v, const std::vector<double>& g,
                                               std::size_t d) {
    const std::size_t N = v.particles;
    double scale = 0.0, spread = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            scale = std::max(scale, std::abs(g[i * d + c]));
            spread = std::max(spread, std::abs(g[i * d + c] - g[c]));
        }
    }
    if (spread <= 1e-12 * std::max(1.0, scale)) {
        std::vector<double> m(d), out(N * d);
        ensemble_mean(g, N, d, m);
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t c = 0; c < d; ++c) out[i * d + c] = m[c];
        }
        return out;
    }
    const auto rows = static_cast<Eigen::Index>(N);
    Eigen::MatrixXd design(rows, 3);
    Eigen::MatrixXd target(rows, static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < N; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        design(r, 0) = 1.0;
        design(r, 1) = v.y[i];
        design(r, 2) = v.y_running_mean[i];
        for (std::size_t c = 0; c < d; ++c) target(r, static_cast<Eigen::Index>(c)) = g[i * d + c];
    }
    std::ostringstream ctx;
    ctx << "observation regression at step " << v.step;
    const LeastSquaresProjector proj(design, 1e12, ctx.str());
    const Eigen::MatrixXd fit = proj.fit(target);
    std::vector<double> out(N * d);
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t c = 0; c < d; ++c) {
            out[i * d + c] = fit(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
        }
    }
    return out;
}

double residual_rms(const std::vector<double>& cond, std::span<const double> u,
                    const std::optional<ControlBox>& box, Player player, std::size_t N,
                    std::size_t d) {
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        double sq = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            double r = cond[i * d + c];
            if (box) {
                const auto cc = static_cast<Eigen::Index>(c);
                const double ui = u[i * d + c];
                // Player 1 descends, player 2 ascends.
                const double step = player == Player::one ? ui - r : ui + r;
                r = ui - std::clamp(step, box->lower(cc), box->upper(cc));
            }
            sq += r * r;
        }
        acc += sq;
    }
    return std::sqrt(acc / static_cast<double>(N));
}

bool check_sign(Player player, double value, double se, double multiplier, double scale) {
    const double band = multiplier * se + roundoff_floor(scale);
    return player == Player::one ? value >= -band : value <= band;
}

const ControlProcess& of(Player p, const ControlProcess& u1, const ControlProcess& u2) {
    return p == Player::one ? u1 : u2;
}

CostSamples samples_with(const ProblemSpec& problem, Player player, const ControlProcess& moved,
                         const ControlProcess& u1, const ControlProcess& u2, const GridConfig& grid,
                         Formulation f) {
    return player == Player::one ? cost_samples(problem, moved, u2, grid, f)
                                 : cost_samples(problem, u1, moved, grid, f);
}

double mean_abs_total(const CostSamples& s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += std::abs(s.total(i));
    return s.size() ? acc / static_cast<double>(s.size()) : 0.0;
}

} // namespace

std::pair<ControlProcess, ControlProcess> lq_saddle_controls(const LQSpec& spec,
                                                             const AdjointSolution& adj) {
    if (!adj.deterministic_reduction) {
        throw ValidationError("LQ saddle synthesis needs the deterministic adjoint");
    }
    if (adj.state_dim != spec.n) throw ValidationError("adjoint dimension does not match the LQ data");
    const std::size_t K = adj.grid.steps;
    Eigen::MatrixXd v1(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(spec.k1));
    Eigen::MatrixXd v2(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(spec.k2));
    for (std::size_t k = 0; k < K; ++k) {
        const double t = adj.grid.time(k);
        const double h = spec.h_at(t);
        const Eigen::Map<const Eigen::VectorXd> p(adj.p_at(k).data(), static_cast<Eigen::Index>(spec.n));
        const Eigen::VectorXd q = adj.mean_q(k);
        const Eigen::VectorXd qt = adj.mean_qt(k);

        // Each player only sees its own blocks: (B_i1 + B_i2, D_i1 + D_i2, G_i1 + G_i2).
        const Eigen::MatrixXd G1 = spec.G11.at(t) + spec.G12.at(t);
        const Eigen::VectorXd rhs1 = -((spec.B11.at(t) + spec.B12.at(t) - h * G1).transpose() * p +
                                       (spec.D11.at(t) + spec.D12.at(t)).transpose() * q +
                                       G1.transpose() * qt);
        const Eigen::LLT<Eigen::MatrixXd> llt1(2.0 * (spec.N11.at(t) + spec.N12.at(t)));
        if (llt1.info() != Eigen::Success) {
            throw NumericalError("player 1 weight N11+N12 is not positive definite at t = " +
                                 std::to_string(t));
        }
        v1.row(static_cast<Eigen::Index>(k)) = llt1.solve(rhs1).transpose();

        const Eigen::MatrixXd G2 = spec.G21.at(t) + spec.G22.at(t);
        const Eigen::VectorXd rhs2 = -((spec.B21.at(t) + spec.B22.at(t) - h * G2).transpose() * p +
                                       (spec.D21.at(t) + spec.D22.at(t)).transpose() * q +
                                       G2.transpose() * qt);
        // 2 (N21 + N22) u = rhs with N21 + N22 negative definite.
        const Eigen::LLT<Eigen::MatrixXd> llt2(-2.0 * (spec.N21.at(t) + spec.N22.at(t)));
        if (llt2.info() != Eigen::Success) {
            throw NumericalError("player 2 weight N21+N22 is not negative definite at t = " +
                                 std::to_string(t));
        }
        v2.row(static_cast<Eigen::Index>(k)) = llt2.solve(-rhs2).transpose();
    }
    return {ControlProcess::deterministic(Player::one, adj.grid, std::move(v1)),
            ControlProcess::deterministic(Player::two, adj.grid, std::move(v2))};
}

ResidualProfile stationarity_residual(const ProblemSpec& problem, const ControlProcess& u1,
                                      const ControlProcess& u2, const AdjointSolution& adj,
                                      const GridConfig& grid) {
    if (!problem.has_gradients()) {
        throw ValidationError("stationarity residual requires analytic coefficient gradients");
    }
    check_adjoint(problem, adj, grid);
    ResidualProfile out;
    const std::size_t d1 = problem.dims.control1, d2 = problem.dims.control2;
    GradientObserver obs(problem, adj, false, std::nullopt,
                         [&](const EnsembleView& v, const std::vector<double>& g1,
                             const std::vector<double>& g2) {
                             const auto c1 = conditional_on_observation(v, g1, d1);
                             const auto c2 = conditional_on_observation(v, g2, d2);
                             out.times.push_back(v.t);
                             out.player1.push_back(residual_rms(c1, v.u1, problem.control_set1,
                                                                Player::one, v.particles, d1));
                             out.player2.push_back(residual_rms(c2, v.u2, problem.control_set2,
                                                                Player::two, v.particles, d2));
                         });
    run_ensemble(problem, u1, u2, grid, obs);
    for (double r : out.player1) out.max1 = std::max(out.max1, r);
    for (double r : out.player2) out.max2 = std::max(out.max2, r);
    return out;
}

std::pair<ControlProcess, std::string> perturbation_direction(const PerturbationConfig& config,
                                                              Player player, std::size_t id,
                                                              const TimeGrid& grid,
                                                              std::size_t dim) {
    const std::size_t K = grid.steps;
    const double dt = grid.dt();
    CounterSequence rng(config.seed, 2 * id + (player == Player::two ? 1 : 0), Stream::perturbation);
    const bool feedback = config.include_feedback && id % 2 == 1 && K >= 2;

    const std::size_t max_pieces = std::max<std::size_t>(1, std::min(config.max_pieces, K));
    const std::size_t wanted = 1 + rng.below(max_pieces);
    std::set<std::size_t> cuts;
    for (std::size_t j = 1; j < wanted; ++j) cuts.insert(1 + rng.below(K - 1));
    std::vector<std::size_t> bounds{0};
    bounds.insert(bounds.end(), cuts.begin(), cuts.end());
    bounds.push_back(K);

    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K),
                                                   static_cast<Eigen::Index>(dim));
    for (std::size_t piece = 0; piece + 1 < bounds.size(); ++piece) {
        Eigen::RowVectorXd level(static_cast<Eigen::Index>(dim));
        for (std::size_t c = 0; c < dim; ++c) level(static_cast<Eigen::Index>(c)) = rng.normal();
        for (std::size_t k = bounds[piece]; k < bounds[piece + 1]; ++k) {
            values.row(static_cast<Eigen::Index>(k)) = level;
        }
    }
    // L2 norm on [0, T]; for c(t) Y(t) it is E int |c|^2 Y^2 dt = int |c|^2 t dt.
    double norm2 = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double w = feedback ? grid.time(k) : 1.0;
        norm2 += values.row(static_cast<Eigen::Index>(k)).squaredNorm() * w * dt;
    }
    if (!(norm2 > 0.0)) {
        values.setConstant(1.0);
        norm2 = static_cast<double>(dim) * grid.horizon;
        if (feedback) norm2 = static_cast<double>(dim) * 0.5 * grid.horizon * grid.horizon;
    }
    values /= std::sqrt(norm2);

    const std::size_t pieces = bounds.size() - 1;
    std::ostringstream desc;
    desc << "player " << player_index(player) << ", "
         << (feedback ? "observation-feedback c(t)Y(t)" : "piecewise-constant") << ", " << pieces
         << (pieces == 1 ? " piece" : " pieces");

    if (!feedback) {
        return {ControlProcess::deterministic(player, grid, std::move(values)), desc.str()};
    }
    std::vector<Eigen::MatrixXd> gains(K);
    for (std::size_t k = 0; k < K; ++k) {
        gains[k] = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), 3);
        gains[k].col(1) = values.row(static_cast<Eigen::Index>(k)).transpose();
    }
    return {ControlProcess::feedback(player, grid, std::move(gains)), desc.str()};
}

std::size_t SaddleReport::failed_checks() const {
    std::size_t failed = 0;
    for (const auto& p : perturbations) failed += p.passed ? 0 : 1;
    return failed;
}

void SaddleReport::update_verdict() {
    verdict = failed_checks() == 0 && residual_passed() && (!convexity || convexity->passed);
}

SaddleReport verify_saddle(const ProblemSpec& problem, const ControlProcess& u1,
                           const ControlProcess& u2, const PerturbationConfig& perturbations,
                           const GridConfig& grid, Formulation formulation) {
    if (perturbations.magnitudes.empty()) throw ValidationError("no perturbation magnitudes given");
    const TimeGrid tg = grid.time_grid(problem.horizon);
    SaddleReport report;
    report.formulation = formulation;
    const CostSamples base = cost_samples(problem, u1, u2, grid, formulation);
    report.candidate = base.estimate();
    const double scale = mean_abs_total(base);

    std::size_t id = 0;
    for (Player player : {Player::one, Player::two}) {
        const ControlProcess& own = of(player, u1, u2);
        for (std::size_t j = 0; j < perturbations.per_player; ++j, ++id) {
            auto [dir, desc] = perturbation_direction(perturbations, player, j, tg, own.dim());
            const double mag = perturbations.magnitudes[j % perturbations.magnitudes.size()];
            const ControlProcess moved = own + dir.scaled(mag);
            const CostSamples s = samples_with(problem, player, moved, u1, u2, grid, formulation);
            const PairedDifference diff = paired_difference(s, base);

            PerturbationResult r;
            r.id = id;
            r.player = player;
            r.magnitude = mag;
            std::ostringstream d;
            d << desc << ", magnitude " << mag;
            r.description = d.str();
            r.cost = s.estimate();
            r.delta = diff.mean;
            r.delta_se = diff.standard_error;
            r.passed = check_sign(player, diff.mean, diff.standard_error, perturbations.se_multiplier,
                                  scale);
            report.perturbations.push_back(std::move(r));
        }
    }
    report.update_verdict();
    return report;
}

ConvexityReport convexity_probe(const ProblemSpec& problem, const ControlProcess& u1,
                                const ControlProcess& u2, const GridConfig& grid,
                                const ConvexityConfig& config, Formulation formulation) {
    const TimeGrid tg = grid.time_grid(problem.horizon);
    ConvexityReport report;
    PerturbationConfig dirs;
    dirs.seed = config.seed;

    for (Player player : {Player::one, Player::two}) {
        const ControlProcess& own = of(player, u1, u2);
        for (std::size_t t = 0; t < config.triples; ++t) {
            auto [d, desc] = perturbation_direction(dirs, player, t, tg, own.dim());
            CounterSequence rng(config.seed + 1, 2 * t + (player == Player::two ? 1 : 0),
                                Stream::perturbation);
            MidpointCheck m;
            m.player = player;
            m.a = rng.uniform(-1.0, 1.0);
            m.b = rng.uniform(-1.0, 1.0);
            const CostSamples ja =
                samples_with(problem, player, own + d.scaled(m.a), u1, u2, grid, formulation);
            const CostSamples jb =
                samples_with(problem, player, own + d.scaled(m.b), u1, u2, grid, formulation);
            const CostSamples jm = samples_with(problem, player, own + d.scaled(0.5 * (m.a + m.b)),
                                                u1, u2, grid, formulation);
            const PairedDifference defect = combine_samples({&ja, &jb, &jm}, {0.5, 0.5, -1.0});
            m.defect = defect.mean;
            m.se = defect.standard_error;
            const double scale = std::max({mean_abs_total(ja), mean_abs_total(jb), mean_abs_total(jm)});
            // Convex for player 1 means a non-negative defect; concave for player 2 a non-positive one.
            m.passed = check_sign(player, m.defect, m.se, config.se_multiplier, scale);
            report.midpoints.push_back(m);
        }
    }

    const bool coercivity = config.coercivity.value_or(problem.lq_origin != nullptr);
    if (coercivity && !config.lambdas.empty()) {
        // Quadratic fit J(lambda) = a lambda^2 + b lambda + c over {0} and the
        // probe lambdas; a is a fixed linear combination of the paired samples.
        std::vector<double> lam{0.0};
        lam.insert(lam.end(), config.lambdas.begin(), config.lambdas.end());
        if (lam.size() < 3) throw ValidationError("coercivity probe needs at least two lambdas");
        Eigen::MatrixXd V(static_cast<Eigen::Index>(lam.size()), 3);
        for (std::size_t j = 0; j < lam.size(); ++j) {
            const auto r = static_cast<Eigen::Index>(j);
            V(r, 0) = lam[j] * lam[j];
            V(r, 1) = lam[j];
            V(r, 2) = 1.0;
        }
        const Eigen::MatrixXd W = (V.transpose() * V).ldlt().solve(V.transpose());
        std::vector<double> weights(lam.size());
        for (std::size_t j = 0; j < lam.size(); ++j) weights[j] = W(0, static_cast<Eigen::Index>(j));

        for (Player player : {Player::one, Player::two}) {
            const ControlProcess& own = of(player, u1, u2);
            const std::size_t dim = own.dim();
            Eigen::MatrixXd unit = Eigen::MatrixXd::Constant(
                static_cast<Eigen::Index>(tg.steps), static_cast<Eigen::Index>(dim),
                1.0 / std::sqrt(static_cast<double>(dim) * tg.horizon));
            const ControlProcess d = ControlProcess::deterministic(player, tg, unit);
            std::vector<CostSamples> runs;
            for (double l : lam) {
                runs.push_back(samples_with(problem, player, d.scaled(l), u1, u2, grid, formulation));
            }
            std::vector<const CostSamples*> ptrs;
            double scale = 0.0;
            for (const auto& r : runs) {
                ptrs.push_back(&r);
                scale = std::max(scale, mean_abs_total(r));
            }
            const PairedDifference a = combine_samples(ptrs, weights);
            CoercivityCheck c;
            c.player = player;
            c.lambdas = config.lambdas;
            for (std::size_t j = 1; j < lam.size(); ++j) {
                c.ratios.push_back(runs[j].estimate().value / (lam[j] * lam[j]));
            }
            c.curvature = a.mean;
            c.curvature_se = a.standard_error;
            const double band = config.se_multiplier * a.standard_error + roundoff_floor(scale);
            c.passed = player == Player::one ? a.mean > band : a.mean < -band;
            report.coercivity.push_back(std::move(c));
        }
    }

    report.passed = true;
    for (const auto& m : report.midpoints) report.passed = report.passed && m.passed;
    for (const auto& c : report.coercivity) report.passed = report.passed && c.passed;
    return report;
}

GradientBridge gradient_bridge(const ProblemSpec& problem, const ControlProcess& u1,
                               const ControlProcess& u2, const AdjointSolution& adj,
                               const GridConfig& grid, Player player, std::size_t step,
                               std::size_t component, double epsilon) {
    if (!problem.has_gradients()) {
        throw ValidationError("gradient bridge requires analytic coefficient gradients");
    }
    check_adjoint(problem, adj, grid);
    const ControlProcess& own = of(player, u1, u2);
    if (!own.is_deterministic()) throw ValidationError("gradient bridge needs a deterministic control");
    if (step >= grid.step_count || component >= own.dim()) {
        throw ValidationError("gradient bridge interval or component out of range");
    }
    if (!(epsilon > 0.0)) throw ValidationError("finite-difference step must be positive");

    GradientBridge out;
    const CostSamples plus = samples_with(problem, player, own.shifted(step, component, epsilon),
                                          u1, u2, grid, Formulation::strong);
    const CostSamples minus = samples_with(problem, player, own.shifted(step, component, -epsilon),
                                           u1, u2, grid, Formulation::strong);
    const PairedDifference fd =
        combine_samples({&plus, &minus}, {0.5 / epsilon, -0.5 / epsilon});
    out.finite_difference = fd.mean;
    out.finite_difference_se = fd.standard_error;

    const double dt = grid.time_grid(problem.horizon).dt();
    const std::size_t d = own.dim();
    GradientObserver obs(problem, adj, true, step,
                         [&](const EnsembleView& v, const std::vector<double>& g1,
                             const std::vector<double>& g2) {
                             const std::vector<double>& g = player == Player::one ? g1 : g2;
                             const std::size_t N = v.particles;
                             double mean = 0.0;
                             for (std::size_t i = 0; i < N; ++i) mean += g[i * d + component];
                             mean /= static_cast<double>(N);
                             double ss = 0.0;
                             for (std::size_t i = 0; i < N; ++i) {
                                 const double e = g[i * d + component] - mean;
                                 ss += e * e;
                             }
                             out.analytic = dt * mean;
                             out.analytic_se = dt * std::sqrt(ss / static_cast<double>(N - 1) /
                                                              static_cast<double>(N));
                         });
    run_ensemble(problem, u1, u2, grid, obs);

    const double se = std::hypot(out.finite_difference_se, out.analytic_se);
    const double scale = std::max(mean_abs_total(plus), mean_abs_total(minus)) / epsilon;
    out.tolerance = 3.0 * se + roundoff_floor(scale);
    out.passed = std::abs(out.finite_difference - out.analytic) <= out.tolerance;
    return out;
}

} // namespace mfgame
