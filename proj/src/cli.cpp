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

#include "mfgame/cli.hpp"

#include "mfgame/adjoint.hpp"
#include "mfgame/artifacts.hpp"
#include "mfgame/cost.hpp"
#include "mfgame/errors.hpp"
#include "mfgame/problem_io.hpp"
#include "mfgame/saddle.hpp"
#include "mfgame/simulate.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace mfgame {
namespace {

namespace fs = std::filesystem;

struct RunConfig {
    std::string command;
    std::string problem_path;
    std::size_t steps = 1000;
    std::size_t particles = 10000;
    std::uint64_t seed = 42;
    std::string out_dir = "mfgame_out";
    int threads = 0;
    std::string u1_path, u2_path;
    std::size_t csv_particles = 100;
    std::optional<double> tol_residual;
    std::string formulation = "strong";
    std::size_t perturbations = 20;
    std::uint64_t perturbation_seed = 7;
    std::size_t convexity_triples = 5;

    GridConfig grid() const { return GridConfig{steps, particles, seed}; }
    ArtifactMeta meta(double horizon) const {
        return ArtifactMeta{command, seed, grid().time_grid(horizon).dt(), particles, steps};
    }
};

ProblemDocument load_validated(const RunConfig& cfg) {
    ProblemDocument doc = load_problem(cfg.problem_path);
    if (doc.is_lq()) {
        const ValidationReport r = validate_lq(*doc.lq);
        if (!r.passed) throw ValidationError(r.summary());
    } else {
        const ValidationReport r = validate_problem(doc.problem);
        if (!r.passed) throw ValidationError(r.summary());
    }
    return doc;
}

ControlProcess control_from(const RunConfig& cfg, const std::string& path, Player player,
                            const ProblemSpec& problem, const std::optional<ControlProcess>& fallback) {
    const TimeGrid tg = cfg.grid().time_grid(problem.horizon);
    const std::size_t dim = player == Player::one ? problem.dims.control1 : problem.dims.control2;
    if (!path.empty()) return parse_control_csv(read_file(path), player, tg, dim, path);
    if (fallback) return *fallback;
    return ControlProcess::zero(player, tg, dim);
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    const ProblemDocument doc = load_validated(cfg);
    const ProblemSpec& problem = doc.problem;
    const ControlProcess u1 = control_from(cfg, cfg.u1_path, Player::one, problem, std::nullopt);
    const ControlProcess u2 = control_from(cfg, cfg.u2_path, Player::two, problem, std::nullopt);
    const GridConfig grid = cfg.grid();
    const ArtifactMeta meta = cfg.meta(problem.horizon);

    TrajectoryBundle bundle = simulate_forward(problem, u1, u2, grid);
    bundle = simulate_density(problem, u1, u2, std::move(bundle));
    const fs::path dir(cfg.out_dir);
    write_file(dir / "trajectory.csv", trajectory_csv(bundle, meta, cfg.csv_particles));

    nlohmann::ordered_json summary = trajectory_summary(bundle, meta);
    summary["cost_strong"] = cost_json(cost_strong(problem, u1, u2, grid));
    summary["cost_weak"] = cost_json(cost_weak(problem, u1, u2, grid));
    write_file(dir / "summary.json", dump(summary));
    out << "simulate: wrote " << (dir / "trajectory.csv").string() << " and "
        << (dir / "summary.json").string() << "\n";
    return kExitPass;
}

int cmd_solve_lq(const RunConfig& cfg, std::ostream& out) {
    const ProblemDocument doc = load_validated(cfg);
    if (!doc.is_lq()) {
        throw ValidationError("solve-lq needs a problem of type \"lq\"; for general problems run "
                              "verify with explicit --u1 and --u2 control files");
    }
    const LQSpec& lq = *doc.lq;
    const ArtifactMeta meta = cfg.meta(lq.horizon);
    const AdjointSolution adj = solve_adjoint_lq(lq, cfg.grid());
    const auto [u1, u2] = lq_saddle_controls(lq, adj);
    const std::vector<double> res = lq_adjoint_residual(lq, adj);
    double worst = 0.0;
    for (double r : res) worst = std::max(worst, r);

    const fs::path dir(cfg.out_dir);
    write_file(dir / "adjoint.csv", adjoint_csv(adj, meta));
    write_file(dir / "controls_u1.csv", control_csv(u1, meta));
    write_file(dir / "controls_u2.csv", control_csv(u2, meta));

    nlohmann::ordered_json j = meta_json(meta);
    j["type"] = "lq";
    j["files"] = {{"adjoint", "adjoint.csv"}, {"u1", "controls_u1.csv"}, {"u2", "controls_u2.csv"}};
    j["adjoint"] = adjoint_summary(adj, meta);
    j["definiteness_margin"] = validate_lq(lq).delta.value_or(0.0);
    j["euler_residual_max"] = worst;
    write_file(dir / "solution.json", dump(j));
    out << "solve-lq: wrote adjoint and saddle controls to " << dir.string() << "\n";
    return kExitPass;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
    const ProblemDocument doc = load_validated(cfg);
    const ProblemSpec& problem = doc.problem;
    const GridConfig grid = cfg.grid();
    const ArtifactMeta meta = cfg.meta(problem.horizon);

    std::optional<ControlProcess> s1, s2;
    std::optional<AdjointSolution> lq_adj;
    if (doc.is_lq()) {
        lq_adj = solve_adjoint_lq(*doc.lq, grid);
        auto [a, b] = lq_saddle_controls(*doc.lq, *lq_adj);
        s1 = std::move(a);
        s2 = std::move(b);
    } else if (cfg.u1_path.empty() || cfg.u2_path.empty()) {
        throw ValidationError("verify on a general problem needs candidate controls via --u1 and --u2");
    }
    const ControlProcess u1 = control_from(cfg, cfg.u1_path, Player::one, problem, s1);
    const ControlProcess u2 = control_from(cfg, cfg.u2_path, Player::two, problem, s2);

    AdjointSolution adj;
    if (lq_adj) {
        adj = std::move(*lq_adj);
    } else {
        const TrajectoryBundle bundle = simulate_forward(problem, u1, u2, grid);
        adj = solve_adjoint_general(problem, u1, u2, bundle);
    }

    const Formulation f = cfg.formulation == "weak" ? Formulation::weak : Formulation::strong;
    PerturbationConfig pc;
    pc.per_player = cfg.perturbations;
    pc.seed = cfg.perturbation_seed;
    SaddleReport report = verify_saddle(problem, u1, u2, pc, grid, f);
    if (cfg.formulation == "both") report.candidate_weak = cost_weak(problem, u1, u2, grid);
    report.residual = stationarity_residual(problem, u1, u2, adj, grid);
    report.residual_tolerance = cfg.tol_residual.value_or(doc.is_lq() ? 1e-6 : 5e-2);
    if (cfg.convexity_triples > 0) {
        ConvexityConfig cc;
        cc.triples = cfg.convexity_triples;
        report.convexity = convexity_probe(problem, u1, u2, grid, cc, f);
    }
    report.update_verdict();

    const fs::path dir(cfg.out_dir);
    write_file(dir / "saddle_report.json", dump(saddle_json(report, meta)));
    write_file(dir / "saddle_checks.csv", saddle_csv(report, meta));
    out << "verify: verdict " << (report.verdict ? "pass" : "fail") << " ("
        << report.failed_checks() << " of " << report.perturbations.size()
        << " inequality checks failed, max stationarity residual "
        << format_double(report.residual->max()) << ")\n";
    return report.verdict ? kExitPass : kExitVerifyFail;
}

void add_common(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--problem", cfg.problem_path, "problem JSON file")->required();
    sub->add_option("--steps", cfg.steps, "time steps K")->check(CLI::PositiveNumber);
    sub->add_option("--particles", cfg.particles, "particles N")->check(CLI::Range(2ul, 100000000ul));
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--threads", cfg.threads, "worker thread cap (0 = default)")
        ->check(CLI::NonNegativeNumber);
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mean-field zero-sum game solver and saddle-point verifier", "mfgame"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    RunConfig cfg;

    auto* sim = app.add_subcommand("simulate", "simulate trajectories and densities");
    add_common(sim, cfg);
    sim->add_option("--u1", cfg.u1_path, "player 1 control CSV (default zero)");
    sim->add_option("--u2", cfg.u2_path, "player 2 control CSV (default zero)");
    sim->add_option("--csv-particles", cfg.csv_particles, "particles written to CSV (0 = all)");

    auto* solve = app.add_subcommand("solve-lq", "solve the LQ adjoint and synthesize saddle controls");
    add_common(solve, cfg);

    auto* verify = app.add_subcommand("verify", "verify a candidate saddle point");
    add_common(verify, cfg);
    verify->add_option("--u1", cfg.u1_path, "player 1 candidate CSV (LQ default: synthesized)");
    verify->add_option("--u2", cfg.u2_path, "player 2 candidate CSV (LQ default: synthesized)");
    verify->add_option("--tol-residual", cfg.tol_residual, "stationarity residual tolerance");
    verify->add_option("--formulation", cfg.formulation, "cost used for the checks")
        ->check(CLI::IsMember({"strong", "weak", "both"}));
    verify->add_option("--perturbations", cfg.perturbations, "perturbations per player");
    verify->add_option("--perturbation-seed", cfg.perturbation_seed, "seed of the perturbation generator");
    verify->add_option("--convexity-triples", cfg.convexity_triples,
                       "midpoint convexity triples per player (0 = skip the probe)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitPass : kExitInvalid;
    }

    if (cfg.threads > 0) set_thread_count(cfg.threads);
    try {
        if (sim->parsed()) {
            cfg.command = "simulate";
            return cmd_simulate(cfg, out);
        }
        if (solve->parsed()) {
            cfg.command = "solve-lq";
            return cmd_solve_lq(cfg, out);
        }
        cfg.command = "verify";
        return cmd_verify(cfg, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
}

} // namespace mfgame
