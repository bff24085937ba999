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

#include "mfgame/problem_io.hpp"

#include "mfgame/errors.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mfgame {
namespace {

using nlohmann::json;
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr std::array<const char*, 6> kArgKeys{"x", "y", "u1", "v1", "u2", "v2"};

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(msg); }

std::string shape(Eigen::Index r, Eigen::Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

double number(const json& v, const std::string& name) {
    if (!v.is_number()) fail("field " + name + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail("field " + name + " must be finite");
    return d;
}

std::size_t positive_int(const json& doc, const char* key) {
    if (!doc.contains(key)) fail(std::string("missing required field ") + key);
    const json& v = doc.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 1) {
        fail(std::string("field ") + key + " must be a positive integer");
    }
    return v.get<std::size_t>();
}

// Number (1x1 only), flat array (row or column) or array of rows.
Eigen::MatrixXd parse_matrix(const json& v, Eigen::Index rows, Eigen::Index cols,
                             const std::string& name) {
    Eigen::MatrixXd m(rows, cols);
    if (v.is_number()) {
        if (rows != 1 || cols != 1) fail("field " + name + " must be a " + shape(rows, cols) + " array");
        m(0, 0) = number(v, name);
        return m;
    }
    if (!v.is_array() || v.empty()) fail("field " + name + " must be a " + shape(rows, cols) + " array");
    if (!v.front().is_array()) {
        if ((rows != 1 && cols != 1) || static_cast<Eigen::Index>(v.size()) != rows * cols) {
            fail("field " + name + " must be a " + shape(rows, cols) + " array, got " +
                 std::to_string(v.size()) + " entries");
        }
        for (std::size_t i = 0; i < v.size(); ++i) m.data()[i] = number(v[i], name);
        return m;
    }
    if (static_cast<Eigen::Index>(v.size()) != rows) {
        fail("field " + name + " must have " + std::to_string(rows) + " rows, got " +
             std::to_string(v.size()));
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = v[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            fail("field " + name + " row " + std::to_string(r) + " must have " +
                 std::to_string(cols) + " entries");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = number(row[static_cast<std::size_t>(c)], name);
    }
    return m;
}

Eigen::VectorXd parse_vector(const json& v, Eigen::Index n, const std::string& name) {
    return parse_matrix(v, n, 1, name).col(0);
}

TimeMatrix parse_time_matrix(const json& v, Eigen::Index rows, Eigen::Index cols,
                             const std::string& name) {
    if (!v.is_object()) return TimeMatrix(parse_matrix(v, rows, cols, name));
    if (!v.contains("times") || !v.contains("values")) {
        fail("field " + name + ": a time table needs \"times\" and \"values\"");
    }
    const json& times = v.at("times");
    const json& values = v.at("values");
    if (!times.is_array() || !values.is_array() || times.size() != values.size() || times.empty()) {
        fail("field " + name + ": \"times\" and \"values\" must be arrays of equal, non-zero length");
    }
    std::vector<double> ts;
    std::vector<Eigen::MatrixXd> vs;
    for (std::size_t j = 0; j < times.size(); ++j) {
        ts.push_back(number(times[j], name + ".times"));
        vs.push_back(parse_matrix(values[j], rows, cols, name + ".values[" + std::to_string(j) + "]"));
    }
    try {
        return TimeMatrix(std::move(ts), std::move(vs));
    } catch (const ValidationError& e) {
        fail("field " + name + ": " + e.what());
    }
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) fail(where + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!ok.count(it.key())) fail(where + ": unknown field \"" + it.key() + "\"");
    }
}

struct Header {
    std::size_t n, k1, k2;
    double horizon;
    Eigen::VectorXd a;
};

Header parse_header(const json& doc) {
    Header h;
    h.n = positive_int(doc, "n");
    h.k1 = positive_int(doc, "k1");
    h.k2 = positive_int(doc, "k2");
    if (!doc.contains("T")) fail("missing required field T");
    h.horizon = number(doc.at("T"), "T");
    if (!(h.horizon > 0.0)) fail("field T must be positive");
    if (!doc.contains("a")) fail("missing required field a");
    h.a = parse_vector(doc.at("a"), static_cast<Eigen::Index>(h.n), "a");
    return h;
}

Dimensions dims_of(const Header& h) { return Dimensions{h.n, h.k1, h.k2}; }

Eigen::Index dim(const Dimensions& d, std::size_t arg) {
    return static_cast<Eigen::Index>(d.of(static_cast<Arg>(arg)));
}

Eigen::Map<const Eigen::VectorXd> cvec(std::span<const double> s) {
    return {s.data(), static_cast<Eigen::Index>(s.size())};
}

// Per-argument coefficient blocks; absent blocks are zero.
struct ArgBlocks {
    std::array<std::optional<Eigen::MatrixXd>, 6> m;

    void read(const json& p, const Dimensions& d, Eigen::Index rows, const std::string& where,
              const std::string& prefix = "") {
        for (std::size_t a = 0; a < 6; ++a) {
            const std::string key = prefix + kArgKeys[a];
            if (p.contains(key)) m[a] = parse_matrix(p.at(key), rows, dim(d, a), where + "." + key);
        }
    }
    // sum_a M_a a, accumulated into out.
    void apply(const Point& pt, Eigen::Ref<Eigen::VectorXd> out) const {
        for (std::size_t a = 0; a < 6; ++a) {
            if (m[a]) out.noalias() += *m[a] * cvec(pt.get(static_cast<Arg>(a)));
        }
    }
    Eigen::MatrixXd block(Arg a, Eigen::Index rows, Eigen::Index cols) const {
        const auto& b = m[static_cast<std::size_t>(a)];
        return b ? *b : Eigen::MatrixXd::Zero(rows, cols);
    }
};

void write_jacobian(const Eigen::MatrixXd& j, std::span<double> out) {
    Eigen::Map<RowMajor>(out.data(), j.rows(), j.cols()) = j;
}

VectorField vector_family(const json& spec, const Dimensions& d, const std::string& where) {
    const auto n = static_cast<Eigen::Index>(d.state);
    const std::string family = spec.value("family", "");
    VectorField f;
    if (family == "zero") {
        check_keys(spec, {"family"}, where);
        f.value = [](const Point&, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
        f.jacobian = [](const Point&, Arg, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
        };
    } else if (family == "linear") {
        check_keys(spec, {"family", "c", "x", "y", "u1", "v1", "u2", "v2"}, where);
        Eigen::VectorXd c = spec.contains("c") ? parse_vector(spec.at("c"), n, where + ".c")
                                               : Eigen::VectorXd::Zero(n);
        ArgBlocks k;
        k.read(spec, d, n, where);
        f.value = [c, k](const Point& p, std::span<double> out) {
            Eigen::Map<Eigen::VectorXd> o(out.data(), static_cast<Eigen::Index>(out.size()));
            o = c;
            k.apply(p, o);
        };
        f.jacobian = [k, n, d](const Point&, Arg a, std::span<double> out) {
            write_jacobian(k.block(a, n, static_cast<Eigen::Index>(d.of(a))), out);
        };
    } else if (family == "bilinear") {
        check_keys(spec, {"family", "S", "w1", "w2", "c"}, where);
        if (!spec.contains("S")) fail(where + ": bilinear family needs S");
        const Eigen::MatrixXd S = parse_matrix(spec.at("S"), n, n, where + ".S");
        const auto k1 = static_cast<Eigen::Index>(d.control1), k2 = static_cast<Eigen::Index>(d.control2);
        Eigen::VectorXd w1 = spec.contains("w1") ? parse_vector(spec.at("w1"), k1, where + ".w1")
                                                 : Eigen::VectorXd::Zero(k1);
        Eigen::VectorXd w2 = spec.contains("w2") ? parse_vector(spec.at("w2"), k2, where + ".w2")
                                                 : Eigen::VectorXd::Zero(k2);
        Eigen::VectorXd c = spec.contains("c") ? parse_vector(spec.at("c"), n, where + ".c")
                                               : Eigen::VectorXd::Zero(n);
        // c + S x (w1 . u1 + w2 . u2)
        f.value = [S, w1, w2, c](const Point& p, std::span<double> out) {
            const double s = w1.dot(cvec(p.u1)) + w2.dot(cvec(p.u2));
            Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) =
                c + s * (S * cvec(p.x));
        };
        f.jacobian = [S, w1, w2, n, d](const Point& p, Arg a, std::span<double> out) {
            const Eigen::VectorXd Sx = S * cvec(p.x);
            switch (a) {
            case Arg::x: write_jacobian((w1.dot(cvec(p.u1)) + w2.dot(cvec(p.u2))) * S, out); break;
            case Arg::u1: write_jacobian(Sx * w1.transpose(), out); break;
            case Arg::u2: write_jacobian(Sx * w2.transpose(), out); break;
            default:
                write_jacobian(Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(d.of(a))), out);
            }
        };
    } else if (family == "sine") {
        check_keys(spec, {"family", "amplitude", "phase", "x", "y", "u1", "v1", "u2", "v2"}, where);
        Eigen::VectorXd amp = spec.contains("amplitude")
                                  ? parse_vector(spec.at("amplitude"), n, where + ".amplitude")
                                  : Eigen::VectorXd::Ones(n);
        Eigen::VectorXd phase = spec.contains("phase")
                                    ? parse_vector(spec.at("phase"), n, where + ".phase")
                                    : Eigen::VectorXd::Zero(n);
        ArgBlocks k;
        k.read(spec, d, n, where);
        auto arg_of = [phase, k](const Point& p) {
            Eigen::VectorXd z = phase;
            k.apply(p, z);
            return z;
        };
        f.value = [amp, arg_of](const Point& p, std::span<double> out) {
            Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) =
                amp.cwiseProduct(arg_of(p).array().sin().matrix());
        };
        f.jacobian = [amp, arg_of, k, n, d](const Point& p, Arg a, std::span<double> out) {
            const Eigen::VectorXd w = amp.cwiseProduct(arg_of(p).array().cos().matrix());
            write_jacobian(w.asDiagonal() * k.block(a, n, static_cast<Eigen::Index>(d.of(a))), out);
        };
    } else {
        fail(where + ": unknown vector coefficient family \"" + family +
             "\" (expected zero, linear, bilinear or sine)");
    }
    return f;
}

struct Weights {
    std::array<std::optional<Eigen::VectorXd>, 6> w;

    void read(const json& p, const Dimensions& d, const std::string& where) {
        for (std::size_t a = 0; a < 6; ++a) {
            if (p.contains(kArgKeys[a])) {
                w[a] = parse_vector(p.at(kArgKeys[a]), dim(d, a), where + "." + kArgKeys[a]);
            }
        }
    }
    double dot(const Point& pt) const {
        double s = 0.0;
        for (std::size_t a = 0; a < 6; ++a) {
            if (w[a]) s += w[a]->dot(cvec(pt.get(static_cast<Arg>(a))));
        }
        return s;
    }
    void gradient(Arg a, double scale, std::span<double> out) const {
        const auto& v = w[static_cast<std::size_t>(a)];
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] = v ? scale * (*v)(static_cast<Eigen::Index>(j)) : 0.0;
        }
    }
};

ScalarField constant_scalar(double value) {
    ScalarField f;
    f.value = [value](const Point&) { return value; };
    f.gradient = [](const Point&, Arg, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    return f;
}

ScalarField observation_family(const json& spec, const Dimensions& d, const std::string& where) {
    const std::string family = spec.value("family", "");
    if (family == "zero") {
        check_keys(spec, {"family"}, where);
        return constant_scalar(0.0);
    }
    if (family == "constant") {
        check_keys(spec, {"family", "value"}, where);
        if (!spec.contains("value")) fail(where + ": constant family needs value");
        return constant_scalar(number(spec.at("value"), where + ".value"));
    }
    if (family == "linear" || family == "tanh") {
        const bool bounded = family == "tanh";
        if (bounded) check_keys(spec, {"family", "amplitude", "c", "x", "y", "u1", "v1", "u2", "v2"}, where);
        else check_keys(spec, {"family", "c", "x", "y", "u1", "v1", "u2", "v2"}, where);
        const double c = spec.contains("c") ? number(spec.at("c"), where + ".c") : 0.0;
        const double amp = spec.contains("amplitude") ? number(spec.at("amplitude"), where + ".amplitude")
                                                      : 1.0;
        Weights w;
        w.read(spec, d, where);
        ScalarField f;
        if (!bounded) {
            f.value = [c, w](const Point& p) { return c + w.dot(p); };
            f.gradient = [w](const Point&, Arg a, std::span<double> out) { w.gradient(a, 1.0, out); };
        } else {
            f.value = [c, w, amp](const Point& p) { return amp * std::tanh(c + w.dot(p)); };
            f.gradient = [c, w, amp](const Point& p, Arg a, std::span<double> out) {
                const double th = std::tanh(c + w.dot(p));
                w.gradient(a, amp * (1.0 - th * th), out);
            };
        }
        return f;
    }
    fail(where + ": unknown observation family \"" + family +
         "\" (expected zero, constant, linear or tanh)");
}

ScalarField running_family(const json& spec, const Dimensions& d, const std::string& where) {
    const std::string family = spec.value("family", "");
    if (family == "zero") {
        check_keys(spec, {"family"}, where);
        return constant_scalar(0.0);
    }
    if (family == "constant") {
        check_keys(spec, {"family", "value"}, where);
        if (!spec.contains("value")) fail(where + ": constant family needs value");
        return constant_scalar(number(spec.at("value"), where + ".value"));
    }
    if (family == "quadratic") {
        check_keys(spec, {"family", "c", "x", "y", "u1", "v1", "u2", "v2", "Px", "Py", "Pu1", "Pv1",
                          "Pu2", "Pv2"},
                   where);
        const double c = spec.contains("c") ? number(spec.at("c"), where + ".c") : 0.0;
        Weights w;
        w.read(spec, d, where);
        std::array<std::optional<Eigen::MatrixXd>, 6> P;
        for (std::size_t a = 0; a < 6; ++a) {
            const std::string key = std::string("P") + kArgKeys[a];
            if (spec.contains(key)) {
                P[a] = parse_matrix(spec.at(key), dim(d, a), dim(d, a), where + "." + key);
            }
        }
        ScalarField f;
        f.value = [c, w, P](const Point& p) {
            double v = c + w.dot(p);
            for (std::size_t a = 0; a < 6; ++a) {
                if (P[a]) {
                    const auto z = cvec(p.get(static_cast<Arg>(a)));
                    v += z.dot(*P[a] * z);
                }
            }
            return v;
        };
        f.gradient = [w, P](const Point& p, Arg a, std::span<double> out) {
            w.gradient(a, 1.0, out);
            const auto& m = P[static_cast<std::size_t>(a)];
            if (m) {
                Eigen::Map<Eigen::VectorXd> o(out.data(), static_cast<Eigen::Index>(out.size()));
                o.noalias() += (*m + m->transpose()) * cvec(p.get(a));
            }
        };
        return f;
    }
    fail(where + ": unknown running cost family \"" + family +
         "\" (expected zero, constant or quadratic)");
}

TerminalField terminal_family(const json& spec, const Dimensions& d, const std::string& where) {
    const auto n = static_cast<Eigen::Index>(d.state);
    const std::string family = spec.value("family", "");
    Eigen::VectorXd wx = Eigen::VectorXd::Zero(n), wy = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd Px = Eigen::MatrixXd::Zero(n, n), Py = Px, Pxy = Px;
    double c = 0.0;
    if (family == "zero") {
        check_keys(spec, {"family"}, where);
    } else if (family == "linear" || family == "quadratic") {
        if (family == "linear") check_keys(spec, {"family", "c", "x", "y"}, where);
        else check_keys(spec, {"family", "c", "x", "y", "Px", "Py", "Pxy"}, where);
        if (spec.contains("c")) c = number(spec.at("c"), where + ".c");
        if (spec.contains("x")) wx = parse_vector(spec.at("x"), n, where + ".x");
        if (spec.contains("y")) wy = parse_vector(spec.at("y"), n, where + ".y");
        if (spec.contains("Px")) Px = parse_matrix(spec.at("Px"), n, n, where + ".Px");
        if (spec.contains("Py")) Py = parse_matrix(spec.at("Py"), n, n, where + ".Py");
        if (spec.contains("Pxy")) Pxy = parse_matrix(spec.at("Pxy"), n, n, where + ".Pxy");
    } else {
        fail(where + ": unknown terminal cost family \"" + family +
             "\" (expected zero, linear or quadratic)");
    }
    TerminalField f;
    f.value = [=](std::span<const double> xs, std::span<const double> ys) {
        const auto x = cvec(xs);
        const auto y = cvec(ys);
        return c + wx.dot(x) + wy.dot(y) + x.dot(Px * x) + y.dot(Py * y) + x.dot(Pxy * y);
    };
    f.gradient = [=](std::span<const double> xs, std::span<const double> ys, Arg a,
                     std::span<double> out) {
        const auto x = cvec(xs);
        const auto y = cvec(ys);
        Eigen::Map<Eigen::VectorXd> o(out.data(), static_cast<Eigen::Index>(out.size()));
        if (a == Arg::x) o = wx + (Px + Px.transpose()) * x + Pxy * y;
        else if (a == Arg::y) o = wy + (Py + Py.transpose()) * y + Pxy.transpose() * x;
        else o.setZero();
    };
    return f;
}

ControlBox parse_box(const json& spec, std::size_t dimension, const std::string& where) {
    check_keys(spec, {"lower", "upper"}, where);
    if (!spec.contains("lower") || !spec.contains("upper")) fail(where + " needs lower and upper");
    ControlBox box;
    const auto k = static_cast<Eigen::Index>(dimension);
    box.lower = parse_vector(spec.at("lower"), k, where + ".lower");
    box.upper = parse_vector(spec.at("upper"), k, where + ".upper");
    if ((box.lower.array() > box.upper.array()).any()) fail(where + ": lower exceeds upper");
    return box;
}

const json& family_or_zero(const json& coeffs, const char* key) {
    static const json zero = {{"family", "zero"}};
    return coeffs.contains(key) ? coeffs.at(key) : zero;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace

LQSpec parse_lq(const json& doc) {
    check_keys(doc, {"type", "n", "k1", "k2", "T", "a", "matrices", "Q", "h", "M", "name",
                     "description"},
               "LQ problem");
    const Header hd = parse_header(doc);
    LQSpec s = LQSpec::zeros(hd.n, hd.k1, hd.k2, hd.horizon);
    s.initial_state = hd.a;
    const auto n = static_cast<Eigen::Index>(hd.n);
    const auto k1 = static_cast<Eigen::Index>(hd.k1);
    const auto k2 = static_cast<Eigen::Index>(hd.k2);

    const json empty = json::object();
    const json& mats = doc.contains("matrices") ? doc.at("matrices") : empty;
    if (!mats.is_object()) fail("field matrices must be an object");

    struct Slot {
        const char* name;
        TimeMatrix* target;
        Eigen::Index rows, cols;
    };
    const Slot slots[] = {
        {"A1", &s.A1, n, n},    {"A2", &s.A2, n, n},    {"C1", &s.C1, n, n},    {"C2", &s.C2, n, n},
        {"F1", &s.F1, n, n},    {"F2", &s.F2, n, n},    {"B11", &s.B11, n, k1}, {"B12", &s.B12, n, k1},
        {"D11", &s.D11, n, k1}, {"D12", &s.D12, n, k1}, {"G11", &s.G11, n, k1}, {"G12", &s.G12, n, k1},
        {"B21", &s.B21, n, k2}, {"B22", &s.B22, n, k2}, {"D21", &s.D21, n, k2}, {"D22", &s.D22, n, k2},
        {"G21", &s.G21, n, k2}, {"G22", &s.G22, n, k2}, {"N11", &s.N11, k1, k1}, {"N12", &s.N12, k1, k1},
        {"N21", &s.N21, k2, k2}, {"N22", &s.N22, k2, k2}, {"Q", &s.Q, n, 1},    {"h", &s.h, 1, 1},
    };
    std::set<std::string> known{"M"};
    for (const auto& slot : slots) known.insert(slot.name);
    for (auto it = mats.begin(); it != mats.end(); ++it) {
        if (!known.count(it.key())) fail("matrices: unknown field \"" + it.key() + "\"");
    }

    auto lookup = [&](const char* name) -> const json* {
        if (mats.contains(name)) {
            if (doc.contains(name)) fail(std::string("field ") + name + " given twice");
            return &mats.at(name);
        }
        return doc.contains(name) ? &doc.at(name) : nullptr;
    };
    for (const auto& slot : slots) {
        if (const json* v = lookup(slot.name)) {
            *slot.target = parse_time_matrix(*v, slot.rows, slot.cols, slot.name);
        }
    }
    for (const char* required : {"N11", "N21", "Q", "M"}) {
        if (!lookup(required)) fail(std::string("missing required LQ field ") + required);
    }
    s.M = parse_vector(*lookup("M"), n, "M");
    return s;
}

ProblemSpec parse_general(const json& doc) {
    check_keys(doc, {"type", "n", "k1", "k2", "T", "a", "coefficients", "name", "description"},
               "general problem");
    const Header hd = parse_header(doc);
    const Dimensions d = dims_of(hd);
    const json empty = json::object();
    const json& coeffs = doc.contains("coefficients") ? doc.at("coefficients") : empty;
    check_keys(coeffs, {"b", "g", "gtilde", "h", "l", "m", "control_set1", "control_set2"},
               "coefficients");

    ProblemSpec p;
    p.dims = d;
    p.horizon = hd.horizon;
    p.initial_state = hd.a;
    p.drift_b = vector_family(family_or_zero(coeffs, "b"), d, "coefficients.b");
    p.diffusion_g = vector_family(family_or_zero(coeffs, "g"), d, "coefficients.g");
    p.diffusion_gtilde = vector_family(family_or_zero(coeffs, "gtilde"), d, "coefficients.gtilde");
    p.observation_h = observation_family(family_or_zero(coeffs, "h"), d, "coefficients.h");
    p.running_cost_l = running_family(family_or_zero(coeffs, "l"), d, "coefficients.l");
    p.terminal_cost_m = terminal_family(family_or_zero(coeffs, "m"), d, "coefficients.m");
    if (coeffs.contains("control_set1")) {
        p.control_set1 = parse_box(coeffs.at("control_set1"), d.control1, "coefficients.control_set1");
    }
    if (coeffs.contains("control_set2")) {
        p.control_set2 = parse_box(coeffs.at("control_set2"), d.control2, "coefficients.control_set2");
    }
    return p;
}

ProblemDocument parse_problem(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        std::ostringstream os;
        os << "malformed JSON at line " << line << ", column " << col << ": " << e.what();
        throw ValidationError(os.str());
    }
    try {
        if (!doc.is_object()) fail("problem document must be a JSON object");
        if (!doc.contains("type") || !doc.at("type").is_string()) {
            fail("missing required field type (\"lq\" or \"general\")");
        }
        ProblemDocument out;
        out.type = doc.at("type").get<std::string>();
        if (out.type == "lq") {
            out.lq = parse_lq(doc);
            out.problem = lift_lq(*out.lq);
        } else if (out.type == "general") {
            out.problem = parse_general(doc);
        } else {
            fail("field type must be \"lq\" or \"general\", got \"" + out.type + "\"");
        }
        return out;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid problem document: ") + e.what());
    }
}

ProblemDocument load_problem(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open problem file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_problem(ss.str());
}

} // namespace mfgame
