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

#include "mfgame/artifacts.hpp"
#include "mfgame/cli.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

namespace fs = std::filesystem;
using mfgame::read_file;

namespace {

struct Result {
    int code = 0;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "mfgame");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = mfgame::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

struct ScratchDir {
    fs::path path = fs::temp_directory_path() / ("mfgame_cli_" + std::to_string(::getpid()));
    ScratchDir() {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

fs::path scratch() {
    static const ScratchDir dir;
    return dir.path;
}

std::string write(const std::string& name, const std::string& text) {
    const fs::path p = scratch() / name;
    std::ofstream(p) << text;
    return p.string();
}

std::string out_dir(const std::string& name) { return (scratch() / name).string(); }

nlohmann::json load_json(const std::string& path) { return nlohmann::json::parse(read_file(path)); }

/// Data rows of a CSV artifact, split on commas.
std::vector<std::vector<double>> rows(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    std::vector<std::vector<double>> out;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("time", 0) == 0) continue;
        std::vector<double> r;
        std::istringstream cells(line);
        std::string c;
        while (std::getline(cells, c, ',')) r.push_back(std::stod(c));
        out.push_back(std::move(r));
    }
    return out;
}

const char* kZeroGeneral = R"({"type": "general", "n": 1, "k1": 1, "k2": 1, "T": 1.0, "a": [1.0]})";

const char* kRichLq = R"({"type": "lq", "n": 1, "k1": 1, "k2": 1, "T": 1.0, "a": [0.5],
 "matrices": {"A1": -0.5, "C1": 0.3, "F1": 0.2, "h": 0.5, "B11": 1, "B21": 0.5,
              "N11": 1, "N12": 0.5, "N21": -1, "N22": -0.5, "Q": 1, "M": [1]}})";

const char* kNoObservationLq = R"({"type": "lq", "n": 1, "k1": 1, "k2": 1, "T": 1.0, "a": [0.5],
 "matrices": {"A1": -0.5, "C1": 0.3, "B11": 1, "B21": 0.5,
              "N11": 1, "N21": -1, "Q": 1, "M": [1]}})";

const std::vector<std::string> kSmallGrid{"--steps", "20", "--particles", "2000", "--seed", "5"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

} // namespace

TEST_CASE("simulate on a zero-coefficient problem keeps x constant") {
    const std::string problem = write("zero.json", kZeroGeneral);
    const std::string dir = out_dir("zero");
    const Result r = run({"simulate", "--problem", problem, "--particles", "10", "--steps", "8", "--out", dir});
    CHECK(r.code == mfgame::kExitPass);
    const auto data = rows(dir + "/trajectory.csv");
    CHECK(data.size() == 9 * 10);
    for (const auto& row : data) {
        CHECK(row[2] == 1.0);
        CHECK(row[3] == 1.0);
    }
    const nlohmann::json s = load_json(dir + "/summary.json");
    CHECK(s["seed"] == 42);
    CHECK(s["N"] == 10);
    CHECK(s["steps"] == 8);
    CHECK(s["version"] == mfgame::kToolVersion);
}

TEST_CASE("non-definite control weight is rejected") {
    const std::string problem = write("npd.json", R"({"type": "lq", "n": 1, "k1": 1, "k2": 1, "T": 1, "a": [0],
        "matrices": {"N11": -1, "N21": -1, "Q": 0, "M": [0]}})");
    const Result r = run({"simulate", "--problem", problem, "--out", out_dir("npd"), "--particles", "10"});
    CHECK(r.code == mfgame::kExitInvalid);
    CHECK(r.err.find("uniform convexity") != std::string::npos);
    CHECK(r.err.find("N11") != std::string::npos);
}

TEST_CASE("repeated runs are byte-identical across thread counts") {
    const std::string problem = write("rich.json", kRichLq);
    const std::string a = out_dir("det_a"), b = out_dir("det_b"), c = out_dir("det_c");
    const auto args = with({"simulate", "--problem", problem}, kSmallGrid);
    REQUIRE(run(with(args, {"--out", a, "--threads", "1"})).code == 0);
    REQUIRE(run(with(args, {"--out", b, "--threads", "1"})).code == 0);
    REQUIRE(run(with(args, {"--out", c, "--threads", "4"})).code == 0);
    for (const char* f : {"/trajectory.csv", "/summary.json"}) {
        CHECK(read_file(a + f) == read_file(b + f));
        CHECK(read_file(a + f) == read_file(c + f));
    }
    const std::string csv = read_file(a + "/trajectory.csv");
    CHECK(csv.rfind("# mfgame " + std::string(mfgame::kToolVersion) + " command=simulate seed=5", 0) == 0);
    CHECK(csv.find("particles=2000") != std::string::npos);
}

TEST_CASE("solve-lq without running cost gives a constant adjoint") {
    const std::string problem = write("q0.json", R"({"type": "lq", "n": 1, "k1": 1, "k2": 1, "T": 1, "a": [0],
        "matrices": {"N11": 1, "N21": -1, "Q": 0, "M": [1.25]}})");
    const std::string dir = out_dir("q0");
    REQUIRE(run({"solve-lq", "--problem", problem, "--steps", "30", "--out", dir}).code == 0);
    const auto data = rows(dir + "/adjoint.csv");
    CHECK(data.size() == 31);
    for (const auto& r : data) CHECK(r[1] == 1.25);
}

TEST_CASE("solve-lq worked scalar instance") {
    const std::string problem = write("worked.json", R"({"type": "lq", "n": 1, "k1": 1, "k2": 1, "T": 1, "a": [0],
        "matrices": {"N11": 1, "B11": 1, "N21": -1, "Q": 0, "M": [2]}})");
    const std::string dir = out_dir("worked");
    const Result r = run({"solve-lq", "--problem", problem, "--steps", "25", "--out", dir});
    REQUIRE(r.code == 0);
    const auto u1 = rows(dir + "/controls_u1.csv");
    CHECK(u1.size() == 25);
    for (const auto& row : u1) CHECK(row[1] == doctest::Approx(-1.0).epsilon(1e-14));
    for (const auto& row : rows(dir + "/controls_u2.csv")) CHECK(row[1] == 0.0);
    const nlohmann::json j = load_json(dir + "/solution.json");
    CHECK(j["seed"] == 42);
    CHECK(j["definiteness_margin"].get<double>() == 1.0);
}

TEST_CASE("solve-lq input errors") {
    SUBCASE("missing matrix") {
        const std::string problem = write("missing.json", R"({"type": "lq", "n": 1, "k1": 1, "k2": 1, "T": 1,
            "a": [0], "matrices": {"N11": 1, "Q": 0, "M": [0]}})");
        const Result r = run({"solve-lq", "--problem", problem, "--out", out_dir("missing")});
        CHECK(r.code == mfgame::kExitInvalid);
        CHECK(r.err.find("N21") != std::string::npos);
    }
    SUBCASE("general problem") {
        const std::string problem = write("general.json", kZeroGeneral);
        const Result r = run({"solve-lq", "--problem", problem, "--out", out_dir("general")});
        CHECK(r.code == mfgame::kExitInvalid);
        CHECK(r.err.find("verify") != std::string::npos);
    }
    SUBCASE("malformed JSON") {
        const std::string problem = write("broken.json", "{\"type\": \"lq\",\n  \"n\": 1,\n");
        const Result r = run({"solve-lq", "--problem", problem, "--out", out_dir("broken")});
        CHECK(r.code == mfgame::kExitInvalid);
        CHECK(r.err.find("line 3") != std::string::npos);
        CHECK(r.err.find("column") != std::string::npos);
    }
    SUBCASE("unreadable file") {
        const Result r = run({"solve-lq", "--problem", (scratch() / "absent.json").string()});
        CHECK(r.code == mfgame::kExitInvalid);
    }
    SUBCASE("unknown flag") {
        const Result r = run({"solve-lq", "--problem", "x.json", "--bogus"});
        CHECK(r.code == mfgame::kExitInvalid);
    }
}

TEST_CASE("solve then verify passes on the LQ instance") {
    const std::string problem = write("rich.json", kRichLq);
    const std::string sol = out_dir("pipe_solve"), ver = out_dir("pipe_verify");
    REQUIRE(run(with({"solve-lq", "--problem", problem, "--out", sol}, kSmallGrid)).code == 0);
    const Result r = run(with({"verify", "--problem", problem, "--out", ver, "--u1", sol + "/controls_u1.csv",
                               "--u2", sol + "/controls_u2.csv", "--perturbations", "6"},
                              kSmallGrid));
    CHECK(r.code == mfgame::kExitPass);
    const nlohmann::json j = load_json(ver + "/saddle_report.json");
    CHECK(j["verdict"] == "pass");
    CHECK(j["failed_inequalities"] == 0);
    CHECK(j["perturbations"].size() == 12);
    CHECK(j["meta"]["seed"] == 5);
    CHECK(j["stationarity"]["max_player1"].get<double>() < 1e-6);
    CHECK(j["stationarity"]["max_player2"].get<double>() < 1e-6);
}

TEST_CASE("corrupted player 1 control is caught") {
    const std::string problem = write("rich.json", kRichLq);
    const std::string sol = out_dir("bad_solve"), ver = out_dir("bad_verify");
    REQUIRE(run(with({"solve-lq", "--problem", problem, "--out", sol}, kSmallGrid)).code == 0);
    std::istringstream in(read_file(sol + "/controls_u1.csv"));
    std::string line, shifted;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("time", 0) == 0) {
            shifted += line + "\n";
            continue;
        }
        const auto comma = line.find(',');
        shifted += line.substr(0, comma + 1) + mfgame::format_double(std::stod(line.substr(comma + 1)) + 1.0) + "\n";
    }
    const std::string bad = write("u1_shifted.csv", shifted);
    const Result r = run(with({"verify", "--problem", problem, "--out", ver, "--u1", bad, "--u2",
                               sol + "/controls_u2.csv", "--perturbations", "6"},
                              kSmallGrid));
    CHECK(r.code != mfgame::kExitPass);
    CHECK(r.code == mfgame::kExitVerifyFail);
    const nlohmann::json j = load_json(ver + "/saddle_report.json");
    CHECK(j["verdict"] == "fail");
    bool violated = false;
    for (const auto& c : j["perturbations"]) violated = violated || (c["player"] == 1 && c["verdict"] == "fail");
    CHECK(violated);
    CHECK(read_file(ver + "/saddle_checks.csv").find("fail") != std::string::npos);
}

TEST_CASE("both formulations agree without observation drift") {
    const std::string problem = write("noobs.json", kNoObservationLq);
    const std::string dir = out_dir("both");
    const Result r = run(with({"verify", "--problem", problem, "--out", dir, "--formulation", "both",
                               "--perturbations", "4"},
                              kSmallGrid));
    CHECK(r.code == mfgame::kExitPass);
    const nlohmann::json j = load_json(dir + "/saddle_report.json");
    CHECK(j["candidate"]["J"] == j["candidate_weak"]["J"]);
    CHECK(j["candidate"]["se"] == j["candidate_weak"]["se"]);
    CHECK(j["candidate_weak"]["formulation"] == "weak");
}

TEST_CASE("control grid mismatch is an input error") {
    const std::string problem = write("rich.json", kRichLq);
    const std::string sol = out_dir("grid_solve");
    REQUIRE(run({"solve-lq", "--problem", problem, "--steps", "10", "--out", sol}).code == 0);
    const Result r = run(with({"verify", "--problem", problem, "--out", out_dir("grid_verify"), "--u1",
                               sol + "/controls_u1.csv", "--u2", sol + "/controls_u2.csv"},
                              kSmallGrid));
    CHECK(r.code == mfgame::kExitInvalid);
    CHECK(r.err.find("grid") != std::string::npos);
}

TEST_CASE("density overflow is a numerical abort") {
    const std::string problem = write("overflow.json", R"({"type": "general", "n": 1, "k1": 1, "k2": 1, "T": 1,
        "a": [0], "coefficients": {"h": {"family": "constant", "value": 1000}}})");
    const Result r = run({"simulate", "--problem", problem, "--steps", "10", "--particles", "50",
                          "--out", out_dir("overflow")});
    CHECK(r.code == mfgame::kExitNumerical);
    CHECK(r.err.find("particle") != std::string::npos);
}

TEST_CASE("verify on a general problem needs candidate files") {
    const std::string problem = write("zero.json", kZeroGeneral);
    const Result r = run({"verify", "--problem", problem, "--out", out_dir("nocand")});
    CHECK(r.code == mfgame::kExitInvalid);
}
