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

#include "mfgame/artifacts.hpp"

#include "mfgame/errors.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mfgame {

using nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_comment(const ArtifactMeta& meta) {
    std::ostringstream os;
    os << "# mfgame " << kToolVersion << " command=" << meta.command << " seed=" << meta.seed
       << " dt=" << format_double(meta.dt) << " particles=" << meta.particles
       << " steps=" << meta.steps << "\n";
    return os.str();
}

ordered_json meta_json(const ArtifactMeta& meta) {
    ordered_json j;
    j["tool"] = "mfgame";
    j["version"] = kToolVersion;
    j["command"] = meta.command;
    j["seed"] = meta.seed;
    j["dt"] = meta.dt;
    j["N"] = meta.particles;
    j["steps"] = meta.steps;
    return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ValidationError("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trajectory_csv(const TrajectoryBundle& bundle, const ArtifactMeta& meta,
                           std::size_t max_particles) {
    const std::size_t n = bundle.dims.state;
    const std::size_t shown =
        max_particles == 0 ? bundle.particles : std::min(max_particles, bundle.particles);
    std::string out = csv_comment(meta);
    out += "time,particle";
    for (std::size_t j = 0; j < n; ++j) out += ",x_" + std::to_string(j);
    out += ",Z\n";
    for (std::size_t k = 0; k <= bundle.steps(); ++k) {
        const std::string t = format_double(bundle.grid.time(k));
        for (std::size_t i = 0; i < shown; ++i) {
            out += t;
            out += ',';
            out += std::to_string(i);
            for (double x : bundle.x_of(k, i)) {
                out += ',';
                out += format_double(x);
            }
            out += ',';
            out += format_double(bundle.z_of(k, i));
            out += '\n';
        }
    }
    return out;
}

ordered_json trajectory_summary(const TrajectoryBundle& bundle, const ArtifactMeta& meta) {
    ordered_json j = meta_json(meta);
    const std::size_t n = bundle.dims.state;
    ordered_json t = ordered_json::array(), xm = ordered_json::array(), zm = ordered_json::array(),
                 xse = ordered_json::array(), zse = ordered_json::array();
    for (std::size_t k = 0; k <= bundle.steps(); ++k) {
        t.push_back(bundle.grid.time(k));
        ordered_json row = ordered_json::array(), se = ordered_json::array();
        for (std::size_t c = 0; c < n; ++c) {
            row.push_back(bundle.mean_x(k)[c]);
            se.push_back(bundle.x_standard_error(k, c));
        }
        xm.push_back(row);
        xse.push_back(se);
        zm.push_back(bundle.z_mean[k]);
        zse.push_back(bundle.z_standard_error(k));
    }
    j["has_density"] = bundle.has_density;
    j["t"] = t;
    j["x_mean"] = xm;
    j["Z_mean"] = zm;
    j["x_se"] = xse;
    j["Z_se"] = zse;
    return j;
}

ordered_json cost_json(const CostEstimate& c) {
    ordered_json j;
    j["J"] = c.value;
    j["se"] = c.standard_error;
    j["running"] = c.running;
    j["terminal"] = c.terminal;
    j["N"] = c.particle_count;
    j["dt"] = c.dt;
    j["seed"] = c.seed;
    j["formulation"] = std::string(formulation_name(c.formulation));
    j["note"] = "se is the independent-sample standard error; the O(1/N) mean-field coupling "
                "bias is not included";
    return j;
}

std::string adjoint_csv(const AdjointSolution& adj, const ArtifactMeta& meta) {
    const std::size_t n = adj.state_dim;
    std::string out = csv_comment(meta);
    out += "time";
    for (const char* name : {"p_", "q_", "qt_"}) {
        for (std::size_t j = 0; j < n; ++j) out += "," + std::string(name) + std::to_string(j);
    }
    out += '\n';
    for (std::size_t k = 0; k <= adj.grid.steps; ++k) {
        out += format_double(adj.grid.time(k));
        for (const Eigen::VectorXd& v : {adj.mean_p(k), adj.mean_q(k), adj.mean_qt(k)}) {
            for (Eigen::Index j = 0; j < v.size(); ++j) {
                out += ',';
                out += format_double(v(j));
            }
        }
        out += '\n';
    }
    return out;
}

ordered_json adjoint_summary(const AdjointSolution& adj, const ArtifactMeta& meta) {
    ordered_json j = meta_json(meta);
    j["deterministic_reduction"] = adj.deterministic_reduction;
    j["state_dim"] = adj.state_dim;
    j["rows_per_time"] = adj.rows;
    ordered_json p0 = ordered_json::array();
    const Eigen::VectorXd v = adj.mean_p(0);
    for (Eigen::Index i = 0; i < v.size(); ++i) p0.push_back(v(i));
    j["p_initial"] = p0;
    if (!adj.condition_numbers.empty()) {
        j["condition_numbers"] = adj.condition_numbers;
        double worst = 0.0;
        for (double c : adj.condition_numbers) worst = std::max(worst, c);
        j["max_condition_number"] = worst;
    }
    return j;
}

std::string control_csv(const ControlProcess& control, const ArtifactMeta& meta) {
    const Eigen::MatrixXd& v = control.values();
    std::string out = csv_comment(meta);
    out += "time";
    for (Eigen::Index c = 0; c < v.cols(); ++c) out += ",u_" + std::to_string(c);
    out += '\n';
    for (Eigen::Index k = 0; k < v.rows(); ++k) {
        out += format_double(control.grid().time(static_cast<std::size_t>(k)));
        for (Eigen::Index c = 0; c < v.cols(); ++c) {
            out += ',';
            out += format_double(v(k, c));
        }
        out += '\n';
    }
    return out;
}

ControlProcess parse_control_csv(const std::string& text, Player player, const TimeGrid& grid,
                                 std::size_t dim, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    bool header = false;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line.rfind("time", 0) != 0) {
                throw ValidationError(source + ": control CSV header must start with \"time\"");
            }
            header = true;
            continue;
        }
        std::vector<double> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            errno = 0;
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (cell.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
                throw ValidationError(source + ": line " + std::to_string(line_no) +
                                      ": cannot read number \"" + cell + "\"");
            }
            row.push_back(v);
        }
        if (row.size() != dim + 1) {
            throw ValidationError(source + ": line " + std::to_string(line_no) + " has " +
                                  std::to_string(row.size()) + " columns, expected " +
                                  std::to_string(dim + 1));
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() != grid.steps) {
        throw ValidationError("control grid incompatible with problem grid: " + source + " has " +
                              std::to_string(rows.size()) + " rows, the grid has " +
                              std::to_string(grid.steps) + " intervals");
    }
    Eigen::MatrixXd values(static_cast<Eigen::Index>(grid.steps), static_cast<Eigen::Index>(dim));
    const double tol = 1e-9 * std::max(1.0, grid.horizon);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (std::abs(rows[k][0] - grid.time(k)) > tol) {
            throw ValidationError("control grid incompatible with problem grid: " + source +
                                  " row " + std::to_string(k) + " has time " +
                                  format_double(rows[k][0]) + ", expected " +
                                  format_double(grid.time(k)));
        }
        for (std::size_t c = 0; c < dim; ++c) {
            values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = rows[k][c + 1];
        }
    }
    return ControlProcess::deterministic(player, grid, std::move(values));
}

ordered_json residual_json(const ResidualProfile& r, double tolerance) {
    ordered_json j;
    j["tolerance"] = tolerance;
    j["max_player1"] = r.max1;
    j["max_player2"] = r.max2;
    j["passed"] = r.max() < tolerance;
    j["t"] = r.times;
    j["player1"] = r.player1;
    j["player2"] = r.player2;
    return j;
}

ordered_json saddle_json(const SaddleReport& report, const ArtifactMeta& meta) {
    ordered_json j;
    j["verdict"] = report.verdict ? "pass" : "fail";
    j["meta"] = meta_json(meta);
    j["formulation"] = std::string(formulation_name(report.formulation));
    j["candidate"] = cost_json(report.candidate);
    if (report.candidate_weak) j["candidate_weak"] = cost_json(*report.candidate_weak);
    j["failed_inequalities"] = report.failed_checks();

    ordered_json checks = ordered_json::array();
    for (const auto& p : report.perturbations) {
        ordered_json c;
        c["id"] = p.id;
        c["player"] = player_index(p.player);
        c["description"] = p.description;
        c["magnitude"] = p.magnitude;
        c["J"] = p.cost.value;
        c["se"] = p.cost.standard_error;
        c["delta"] = p.delta;
        c["delta_se"] = p.delta_se;
        c["inequality"] = p.player == Player::one ? "J(u1, ubar2) >= J(ubar1, ubar2)"
                                                  : "J(ubar1, u2) <= J(ubar1, ubar2)";
        c["verdict"] = p.passed ? "pass" : "fail";
        checks.push_back(c);
    }
    j["perturbations"] = checks;

    if (report.residual) j["stationarity"] = residual_json(*report.residual, report.residual_tolerance);

    if (report.convexity) {
        ordered_json cv;
        cv["passed"] = report.convexity->passed;
        ordered_json mids = ordered_json::array();
        for (const auto& m : report.convexity->midpoints) {
            ordered_json e;
            e["player"] = player_index(m.player);
            e["a"] = m.a;
            e["b"] = m.b;
            e["defect"] = m.defect;
            e["se"] = m.se;
            e["verdict"] = m.passed ? "pass" : "fail";
            mids.push_back(e);
        }
        cv["midpoints"] = mids;
        ordered_json co = ordered_json::array();
        for (const auto& c : report.convexity->coercivity) {
            ordered_json e;
            e["player"] = player_index(c.player);
            e["lambdas"] = c.lambdas;
            e["ratios"] = c.ratios;
            e["curvature"] = c.curvature;
            e["curvature_se"] = c.curvature_se;
            e["verdict"] = c.passed ? "pass" : "fail";
            co.push_back(e);
        }
        cv["coercivity"] = co;
        j["convexity"] = cv;
    }
    return j;
}

std::string saddle_csv(const SaddleReport& report, const ArtifactMeta& meta) {
    std::string out = csv_comment(meta);
    out += "perturbation_id,player,J,SE,delta,verdict\n";
    for (const auto& p : report.perturbations) {
        out += std::to_string(p.id) + "," + std::to_string(player_index(p.player)) + "," +
               format_double(p.cost.value) + "," + format_double(p.cost.standard_error) + "," +
               format_double(p.delta) + "," + (p.passed ? "pass" : "fail") + "\n";
    }
    return out;
}

} // namespace mfgame
