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

#include "mfgame/model.hpp"

#include "mfgame/errors.hpp"
#include "mfgame/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace mfgame {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const Eigen::VectorXd> cvec(std::span<const double> s) {
    return {s.data(), static_cast<Eigen::Index>(s.size())};
}

double quadratic_form(const Eigen::MatrixXd& n, std::span<const double> u) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n.rows(); ++i) {
        double row = 0.0;
        for (Eigen::Index j = 0; j < n.cols(); ++j) {
            row += n(i, j) * u[static_cast<std::size_t>(j)];
        }
        acc += u[static_cast<std::size_t>(i)] * row;
    }
    return acc;
}

std::string format_vector(std::span<const double> v) {
    std::ostringstream os;
    os.precision(6);
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        os << (i ? ", " : "") << v[i];
    }
    os << ']';
    return os.str();
}

std::string describe_point(const Point& p) {
    std::ostringstream os;
    os << "t=" << p.t;
    for (Arg a : kAllArgs) {
        os << ", " << arg_name(a) << '=' << format_vector(p.get(a));
    }
    return os.str();
}

// Mutable storage behind a Point, so single components can be nudged.
struct PointBuffer {
    double t = 0.0;
    std::array<std::vector<double>, 6> args;

    Point view() const {
        return Point{t, args[0], args[1], args[2], args[3], args[4], args[5]};
    }
};

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

struct GradientChecker {
    double tolerance;
    double worst = 0.0;
    std::string worst_where;

    // out(point) must fill `dst` with the coefficient value (out_dim entries).
    template <class Eval, class Analytic>
    void check(const std::string& name, PointBuffer& buf, Arg a, std::size_t out_dim,
               Eval&& eval, Analytic&& analytic) {
        auto& slot = buf.args[static_cast<std::size_t>(a)];
        const std::size_t d = slot.size();
        if (d == 0) return;
        std::vector<double> jac(out_dim * d);
        analytic(buf.view(), a, std::span<double>(jac));
        std::vector<double> plus(out_dim), minus(out_dim);
        for (std::size_t j = 0; j < d; ++j) {
            const double z = slot[j];
            const double step = 1e-6 * std::max(1.0, std::abs(z));
            slot[j] = z + step;
            eval(buf.view(), std::span<double>(plus));
            slot[j] = z - step;
            eval(buf.view(), std::span<double>(minus));
            slot[j] = z;
            for (std::size_t r = 0; r < out_dim; ++r) {
                const double fd = (plus[r] - minus[r]) / (2.0 * step);
                const double err = std::abs(jac[r * d + j] - fd) / std::max(1.0, std::abs(fd));
                if (!(err <= worst)) {
                    worst = std::isnan(err) ? std::numeric_limits<double>::infinity() : err;
                    std::ostringstream os;
                    os << "d" << name << "[" << r << "]/d" << arg_name(a) << "[" << j
                       << "]: analytic " << jac[r * d + j] << " vs central difference " << fd
                       << " at t=" << buf.t;
                    worst_where = os.str();
                }
            }
        }
    }
};

void require_finite(const std::string& name, std::span<const double> values, const Point& p) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw ValidationError("coefficient " + name + " returned a non-finite value at " +
                                  describe_point(p));
        }
    }
}

void require_shape(const TimeMatrix& m, const char* name, Eigen::Index rows, Eigen::Index cols) {
    if (m.empty()) {
        throw ValidationError(std::string("LQ field ") + name + " is missing");
    }
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream os;
        os << "LQ field " << name << " has shape " << m.rows() << "x" << m.cols() << ", expected "
           << rows << "x" << cols;
        throw ValidationError(os.str());
    }
}

double asymmetry(const TimeMatrix& m) {
    double worst = 0.0;
    for (const auto& v : m.values()) {
        worst = std::max(worst, (v - v.transpose()).cwiseAbs().maxCoeff());
    }
    return worst;
}

Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                     Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

struct Margin {
    double value = std::numeric_limits<double>::infinity();
    double at_time = 0.0;
};

// Smallest eigenvalue of sign * (a + b) over the breakpoints of a and b inside [0, T].
Margin definiteness_margin(const TimeMatrix& a, const TimeMatrix* b, double sign, double horizon) {
    Margin out;
    for (double t : merged_breakpoints({&a, b ? b : &a})) {
        if (t > horizon) break;
        Eigen::MatrixXd m = a.at(t);
        if (b) m += b->at(t);
        const double lam = (sign * sym_eigenvalues(m)).minCoeff();
        if (lam < out.value) {
            out.value = lam;
            out.at_time = t;
        }
    }
    return out;
}

// Non-zero (argument, matrix) terms of an affine vector field.
struct AffineTerms {
    std::vector<std::pair<Arg, const TimeMatrix*>> terms;

    void add(Arg a, const TimeMatrix& m) {
        if (m.max_abs() != 0.0) terms.emplace_back(a, &m);
    }
};

VectorField affine_field(std::shared_ptr<const LQSpec> s, AffineTerms terms,
                         std::array<const TimeMatrix*, 6> by_arg) {
    VectorField f;
    f.value = [s, terms](const Point& p, std::span<double> out) {
        Eigen::Map<Eigen::VectorXd> o(out.data(), static_cast<Eigen::Index>(out.size()));
        o.setZero();
        for (const auto& [a, m] : terms.terms) {
            o.noalias() += m->at(p.t) * cvec(p.get(a));
        }
    };
    f.jacobian = [s, by_arg](const Point& p, Arg a, std::span<double> out) {
        const Eigen::MatrixXd& m = by_arg[static_cast<std::size_t>(a)]->at(p.t);
        Eigen::Map<RowMajor>(out.data(), m.rows(), m.cols()) = m;
    };
    return f;
}

} // namespace

std::string_view arg_name(Arg a) {
    switch (a) {
    case Arg::x: return "x";
    case Arg::y: return "y";
    case Arg::u1: return "u1";
    case Arg::v1: return "v1";
    case Arg::u2: return "u2";
    case Arg::v2: return "v2";
    }
    return "?";
}

std::size_t Dimensions::of(Arg a) const {
    switch (a) {
    case Arg::x:
    case Arg::y: return state;
    case Arg::u1:
    case Arg::v1: return control1;
    case Arg::u2:
    case Arg::v2: return control2;
    }
    return 0;
}

std::span<const double> Point::get(Arg a) const {
    switch (a) {
    case Arg::x: return x;
    case Arg::y: return y;
    case Arg::u1: return u1;
    case Arg::v1: return v1;
    case Arg::u2: return u2;
    case Arg::v2: return v2;
    }
    return {};
}

bool ProblemSpec::has_gradients() const {
    return drift_b.jacobian && diffusion_g.jacobian && diffusion_gtilde.jacobian &&
           observation_h.gradient && running_cost_l.gradient && terminal_cost_m.gradient;
}

LQSpec LQSpec::zeros(std::size_t n, std::size_t k1, std::size_t k2, double horizon) {
    const auto N = static_cast<Eigen::Index>(n);
    const auto K1 = static_cast<Eigen::Index>(k1);
    const auto K2 = static_cast<Eigen::Index>(k2);
    LQSpec s;
    s.n = n;
    s.k1 = k1;
    s.k2 = k2;
    s.horizon = horizon;
    s.initial_state = Eigen::VectorXd::Zero(N);
    for (TimeMatrix* m : {&s.A1, &s.A2, &s.C1, &s.C2, &s.F1, &s.F2}) *m = TimeMatrix::zeros(N, N);
    for (TimeMatrix* m : {&s.B11, &s.B12, &s.D11, &s.D12, &s.G11, &s.G12}) *m = TimeMatrix::zeros(N, K1);
    for (TimeMatrix* m : {&s.B21, &s.B22, &s.D21, &s.D22, &s.G21, &s.G22}) *m = TimeMatrix::zeros(N, K2);
    s.N11 = TimeMatrix::zeros(K1, K1);
    s.N12 = TimeMatrix::zeros(K1, K1);
    s.N21 = TimeMatrix::zeros(K2, K2);
    s.N22 = TimeMatrix::zeros(K2, K2);
    s.Q = TimeMatrix::zeros(N, 1);
    s.h = TimeMatrix::zeros(1, 1);
    s.M = Eigen::VectorXd::Zero(N);
    return s;
}

void ValidationReport::add(ValidationCheck check) {
    passed = passed && check.passed;
    checks.push_back(std::move(check));
}

std::string ValidationReport::summary() const {
    for (const auto& c : checks) {
        if (!c.passed) return c.name + ": " + c.detail;
    }
    return "ok";
}

ValidationReport validate_problem(const ProblemSpec& spec, const ValidationOptions& options) {
    const Dimensions& d = spec.dims;
    if (d.state == 0 || d.control1 == 0 || d.control2 == 0) {
        throw ValidationError("state and control dimensions must be positive");
    }
    if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon)) {
        throw ValidationError("horizon T must be a positive finite number");
    }
    if (static_cast<std::size_t>(spec.initial_state.size()) != d.state ||
        !spec.initial_state.allFinite()) {
        throw ValidationError("initial state must be a finite vector of length n");
    }
    if (!spec.drift_b.value || !spec.diffusion_g.value || !spec.diffusion_gtilde.value ||
        !spec.observation_h.value || !spec.running_cost_l.value || !spec.terminal_cost_m.value) {
        throw ValidationError("every coefficient (b, g, gtilde, h, l, m) must be defined");
    }

    ValidationReport report;
    report.sample_points = options.sample_points;
    CounterSequence rng(options.seed, 0, Stream::validation);
    GradientChecker grad{options.gradient_tolerance, 0.0, {}};
    const std::size_t n = d.state;
    std::vector<double> vb(n), vg(n), vgt(n);
    double growth_b = 0.0, growth_g = 0.0, growth_gt = 0.0, max_h = 0.0, growth_l = 0.0;

    PointBuffer buf;
    for (Arg a : kAllArgs) buf.args[static_cast<std::size_t>(a)].resize(d.of(a));

    for (std::size_t s = 0; s < options.sample_points; ++s) {
        buf.t = rng.uniform(0.0, spec.horizon);
        double arg_norm = 0.0;
        for (auto& slot : buf.args) {
            for (double& v : slot) v = rng.uniform(-options.sample_radius, options.sample_radius);
            arg_norm += norm(slot);
        }
        const Point p = buf.view();

        spec.drift_b.value(p, vb);
        require_finite("b", vb, p);
        spec.diffusion_g.value(p, vg);
        require_finite("g", vg, p);
        spec.diffusion_gtilde.value(p, vgt);
        require_finite("gtilde", vgt, p);
        const double hv = spec.observation_h.value(p);
        require_finite("h", std::span<const double>(&hv, 1), p);
        const double lv = spec.running_cost_l.value(p);
        require_finite("l", std::span<const double>(&lv, 1), p);
        const double mv = spec.terminal_cost_m.value(p.x, p.y);
        require_finite("m", std::span<const double>(&mv, 1), p);

        growth_b = std::max(growth_b, norm(vb) / (1.0 + arg_norm));
        growth_g = std::max(growth_g, norm(vg) / (1.0 + arg_norm));
        growth_gt = std::max(growth_gt, norm(vgt) / (1.0 + arg_norm));
        max_h = std::max(max_h, std::abs(hv));
        growth_l = std::max(growth_l, std::abs(lv) / (1.0 + arg_norm * arg_norm));

        auto vector_eval = [](const VectorField& f) {
            return [&f](const Point& q, std::span<double> out) { f.value(q, out); };
        };
        auto scalar_eval = [](const ScalarField& f) {
            return [&f](const Point& q, std::span<double> out) { out[0] = f.value(q); };
        };
        for (Arg a : kAllArgs) {
            if (spec.drift_b.jacobian)
                grad.check("b", buf, a, n, vector_eval(spec.drift_b), spec.drift_b.jacobian);
            if (spec.diffusion_g.jacobian)
                grad.check("g", buf, a, n, vector_eval(spec.diffusion_g), spec.diffusion_g.jacobian);
            if (spec.diffusion_gtilde.jacobian)
                grad.check("gtilde", buf, a, n, vector_eval(spec.diffusion_gtilde),
                           spec.diffusion_gtilde.jacobian);
            if (spec.observation_h.gradient)
                grad.check("h", buf, a, 1, scalar_eval(spec.observation_h),
                           spec.observation_h.gradient);
            if (spec.running_cost_l.gradient)
                grad.check("l", buf, a, 1, scalar_eval(spec.running_cost_l),
                           spec.running_cost_l.gradient);
        }
        if (spec.terminal_cost_m.gradient) {
            const auto& m = spec.terminal_cost_m;
            auto eval = [&m](const Point& q, std::span<double> out) { out[0] = m.value(q.x, q.y); };
            auto analytic = [&m](const Point& q, Arg a, std::span<double> out) {
                m.gradient(q.x, q.y, a, out);
            };
            grad.check("m", buf, Arg::x, 1, eval, analytic);
            grad.check("m", buf, Arg::y, 1, eval, analytic);
        }
    }

    report.max_gradient_error = grad.worst;
    report.add({"gradient consistency", grad.worst <= options.gradient_tolerance, grad.worst,
                grad.worst_where.empty() ? "no analytic gradients mismatched"
                                         : "worst mismatch " + grad.worst_where});
    report.add({"growth of b", true, growth_b, "max |b| / (1 + |args|) over samples"});
    report.add({"growth of g", true, growth_g, "max |g| / (1 + |args|) over samples"});
    report.add({"growth of gtilde", true, growth_gt, "max |gtilde| / (1 + |args|) over samples"});
    report.add({"bound on h", true, max_h, "max |h| over samples"});
    report.add({"growth of l", true, growth_l, "max |l| / (1 + |args|^2) over samples"});
    return report;
}

ValidationReport validate_lq(const LQSpec& s) {
    const auto n = static_cast<Eigen::Index>(s.n);
    const auto k1 = static_cast<Eigen::Index>(s.k1);
    const auto k2 = static_cast<Eigen::Index>(s.k2);
    if (s.n == 0 || s.k1 == 0 || s.k2 == 0) {
        throw ValidationError("LQ dimensions n, k1, k2 must be positive");
    }
    if (!(s.horizon > 0.0) || !std::isfinite(s.horizon)) {
        throw ValidationError("horizon T must be a positive finite number");
    }
    if (s.initial_state.size() != n) throw ValidationError("initial state must have length n");
    if (s.M.size() != n) throw ValidationError("LQ field M must have length n");

    const std::pair<const TimeMatrix*, const char*> nn[] = {
        {&s.A1, "A1"}, {&s.A2, "A2"}, {&s.C1, "C1"}, {&s.C2, "C2"}, {&s.F1, "F1"}, {&s.F2, "F2"}};
    const std::pair<const TimeMatrix*, const char*> nk1[] = {
        {&s.B11, "B11"}, {&s.B12, "B12"}, {&s.D11, "D11"}, {&s.D12, "D12"}, {&s.G11, "G11"}, {&s.G12, "G12"}};
    const std::pair<const TimeMatrix*, const char*> nk2[] = {
        {&s.B21, "B21"}, {&s.B22, "B22"}, {&s.D21, "D21"}, {&s.D22, "D22"}, {&s.G21, "G21"}, {&s.G22, "G22"}};
    for (auto [m, name] : nn) require_shape(*m, name, n, n);
    for (auto [m, name] : nk1) require_shape(*m, name, n, k1);
    for (auto [m, name] : nk2) require_shape(*m, name, n, k2);
    require_shape(s.N11, "N11", k1, k1);
    require_shape(s.N12, "N12", k1, k1);
    require_shape(s.N21, "N21", k2, k2);
    require_shape(s.N22, "N22", k2, k2);
    require_shape(s.Q, "Q", n, 1);
    require_shape(s.h, "h", 1, 1);

    ValidationReport report;
    double worst_entry = 0.0;
    std::string worst_name;
    auto scan = [&](const TimeMatrix& m, const char* name) {
        const double v = m.max_abs();
        if (!(v <= worst_entry)) {
            worst_entry = v;
            worst_name = name;
        }
    };
    for (auto [m, name] : nn) scan(*m, name);
    for (auto [m, name] : nk1) scan(*m, name);
    for (auto [m, name] : nk2) scan(*m, name);
    scan(s.N11, "N11");
    scan(s.N12, "N12");
    scan(s.N21, "N21");
    scan(s.N22, "N22");
    scan(s.Q, "Q");
    scan(s.h, "h");
    const bool bounded = std::isfinite(worst_entry) && s.M.allFinite() && s.initial_state.allFinite();
    report.add({"bounded coefficients", bounded, worst_entry,
                bounded ? "largest entry in " + worst_name
                        : "non-finite entry in " + (std::isfinite(worst_entry) ? std::string("M or a")
                                                                               : worst_name)});

    const std::pair<const TimeMatrix*, const char*> weights[] = {
        {&s.N11, "N11"}, {&s.N12, "N12"}, {&s.N21, "N21"}, {&s.N22, "N22"}};
    for (auto [m, name] : weights) {
        const double asym = asymmetry(*m);
        std::ostringstream os;
        os << name << " must be symmetric (max |N - N^T| = " << asym << ")";
        report.add({std::string("symmetry of ") + name, asym <= 1e-12, asym, os.str()});
    }
    if (!report.passed) {
        return report;
    }

    struct Named {
        Margin margin;
        const char* label;
        const char* condition;
    };
    const Named margins[] = {
        {definiteness_margin(s.N11, nullptr, 1.0, s.horizon), "N11",
         "player 1 uniform convexity: N11 must be uniformly positive definite"},
        {definiteness_margin(s.N11, &s.N12, 1.0, s.horizon), "N11+N12",
         "player 1 uniform convexity: N11+N12 must be uniformly positive definite"},
        {definiteness_margin(s.N21, nullptr, -1.0, s.horizon), "N21",
         "player 2 uniform concavity: N21 must be uniformly negative definite"},
        {definiteness_margin(s.N21, &s.N22, -1.0, s.horizon), "N21+N22",
         "player 2 uniform concavity: N21+N22 must be uniformly negative definite"},
    };
    double delta = std::numeric_limits<double>::infinity();
    for (const auto& m : margins) {
        delta = std::min(delta, m.margin.value);
        std::ostringstream os;
        os << m.condition << " (margin " << m.margin.value << " at t=" << m.margin.at_time << ")";
        report.add({std::string("definiteness of ") + m.label, m.margin.value > 0.0, m.margin.value,
                    os.str()});
    }
    report.delta = delta;
    return report;
}

ProblemSpec lift_lq(const LQSpec& spec) {
    auto s = std::make_shared<const LQSpec>(spec);
    ProblemSpec p;
    p.dims = Dimensions{s->n, s->k1, s->k2};
    p.horizon = s->horizon;
    p.initial_state = s->initial_state;
    p.lq_origin = s;

    {
        AffineTerms t;
        t.add(Arg::x, s->A1); t.add(Arg::y, s->A2); t.add(Arg::u1, s->B11);
        t.add(Arg::v1, s->B12); t.add(Arg::u2, s->B21); t.add(Arg::v2, s->B22);
        p.drift_b = affine_field(s, t, {&s->A1, &s->A2, &s->B11, &s->B12, &s->B21, &s->B22});
    }
    {
        AffineTerms t;
        t.add(Arg::x, s->C1); t.add(Arg::y, s->C2); t.add(Arg::u1, s->D11);
        t.add(Arg::v1, s->D12); t.add(Arg::u2, s->D21); t.add(Arg::v2, s->D22);
        p.diffusion_g = affine_field(s, t, {&s->C1, &s->C2, &s->D11, &s->D12, &s->D21, &s->D22});
    }
    {
        AffineTerms t;
        t.add(Arg::x, s->F1); t.add(Arg::y, s->F2); t.add(Arg::u1, s->G11);
        t.add(Arg::v1, s->G12); t.add(Arg::u2, s->G21); t.add(Arg::v2, s->G22);
        p.diffusion_gtilde = affine_field(s, t, {&s->F1, &s->F2, &s->G11, &s->G12, &s->G21, &s->G22});
    }

    p.observation_h.value = [s](const Point& q) { return s->h_at(q.t); };
    p.observation_h.gradient = [](const Point&, Arg, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };

    p.running_cost_l.value = [s](const Point& q) {
        return s->Q.at(q.t).col(0).dot(cvec(q.x)) + quadratic_form(s->N11.at(q.t), q.u1) +
               quadratic_form(s->N12.at(q.t), q.v1) + quadratic_form(s->N21.at(q.t), q.u2) +
               quadratic_form(s->N22.at(q.t), q.v2);
    };
    p.running_cost_l.gradient = [s](const Point& q, Arg a, std::span<double> out) {
        Eigen::Map<Eigen::VectorXd> o(out.data(), static_cast<Eigen::Index>(out.size()));
        const double t = q.t;
        switch (a) {
        case Arg::x: o = s->Q.at(t).col(0); break;
        case Arg::y: o.setZero(); break;
        case Arg::u1: o.noalias() = 2.0 * s->N11.at(t) * cvec(q.u1); break;
        case Arg::v1: o.noalias() = 2.0 * s->N12.at(t) * cvec(q.v1); break;
        case Arg::u2: o.noalias() = 2.0 * s->N21.at(t) * cvec(q.u2); break;
        case Arg::v2: o.noalias() = 2.0 * s->N22.at(t) * cvec(q.v2); break;
        }
    };

    p.terminal_cost_m.value = [s](std::span<const double> x, std::span<const double>) {
        return s->M.dot(cvec(x));
    };
    p.terminal_cost_m.gradient = [s](std::span<const double>, std::span<const double>, Arg a,
                                     std::span<double> out) {
        Eigen::Map<Eigen::VectorXd> o(out.data(), static_cast<Eigen::Index>(out.size()));
        if (a == Arg::x) o = s->M;
        else o.setZero();
    };
    return p;
}

} // namespace mfgame
