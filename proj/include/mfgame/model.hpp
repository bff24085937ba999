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

#pragma once

#include "mfgame/time_function.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mfgame {

/// Coefficient arguments. y, v1 and v2 hold the expectations of x, u1 and u2.
enum class Arg { x, y, u1, v1, u2, v2 };

inline constexpr std::array<Arg, 6> kAllArgs{Arg::x, Arg::y, Arg::u1, Arg::v1, Arg::u2, Arg::v2};

std::string_view arg_name(Arg a);

struct Dimensions {
    std::size_t state = 1;
    std::size_t control1 = 1;
    std::size_t control2 = 1;

    std::size_t of(Arg a) const;
};

/// A point (t, x, y, u1, v1, u2, v2) at which coefficients are evaluated.
struct Point {
    double t = 0.0;
    std::span<const double> x, y, u1, v1, u2, v2;

    std::span<const double> get(Arg a) const;
};

/// R^n-valued coefficient (b, g, g~). The Jacobian callback, when set,
/// writes the row-major (n x dim(arg)) matrix of partial derivatives.
struct VectorField {
    std::function<void(const Point&, std::span<double>)> value;
    std::function<void(const Point&, Arg, std::span<double>)> jacobian;
};

/// Scalar coefficient (h, l). The gradient callback writes dim(arg) entries.
struct ScalarField {
    std::function<double(const Point&)> value;
    std::function<void(const Point&, Arg, std::span<double>)> gradient;
};

/// Terminal cost m(x, y); gradient is taken with respect to Arg::x or Arg::y.
struct TerminalField {
    std::function<double(std::span<const double>, std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<const double>, Arg, std::span<double>)>
        gradient;
};

/// Optional box constraint on a player's control set. Only used by the
/// variational-inequality form of the stationarity check.
struct ControlBox {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

struct LQSpec;

/// General mean-field game with deterministic coefficients.
struct ProblemSpec {
    Dimensions dims;
    double horizon = 1.0;
    Eigen::VectorXd initial_state;

    VectorField drift_b;
    VectorField diffusion_g;
    VectorField diffusion_gtilde;
    ScalarField observation_h;
    ScalarField running_cost_l;
    TerminalField terminal_cost_m;

    std::optional<ControlBox> control_set1;
    std::optional<ControlBox> control_set2;

    /// Set when the problem was produced by lift_lq.
    std::shared_ptr<const LQSpec> lq_origin;

    bool has_gradients() const;
};

/// Linear-quadratic game data. All matrices are deterministic functions of time.
struct LQSpec {
    std::size_t n = 1, k1 = 1, k2 = 1;
    double horizon = 1.0;
    Eigen::VectorXd initial_state;

    TimeMatrix A1, A2, C1, C2, F1, F2;        // n x n
    TimeMatrix B11, B12, D11, D12, G11, G12;  // n x k1
    TimeMatrix B21, B22, D21, D22, G21, G22;  // n x k2
    TimeMatrix N11, N12;                      // k1 x k1
    TimeMatrix N21, N22;                      // k2 x k2
    TimeMatrix Q;                             // n x 1
    TimeMatrix h;                             // 1 x 1
    Eigen::VectorXd M;

    /// Every coefficient zero, correctly shaped.
    static LQSpec zeros(std::size_t n, std::size_t k1, std::size_t k2, double horizon);

    double h_at(double t) const { return h.at(t)(0, 0); }
};

struct ValidationCheck {
    std::string name;
    bool passed = true;
    double value = 0.0;
    std::string detail;
};

struct ValidationReport {
    bool passed = true;
    std::vector<ValidationCheck> checks;
    std::size_t sample_points = 0;
    double max_gradient_error = 0.0;
    /// Uniform definiteness margin (LQ only).
    std::optional<double> delta;

    void add(ValidationCheck check);
    /// First failing check's diagnostic, or "ok".
    std::string summary() const;
};

struct ValidationOptions {
    std::size_t sample_points = 128;
    std::uint64_t seed = 20170101;
    double gradient_tolerance = 1e-5;
    double sample_radius = 2.0;
};

/// Spot-checks finiteness, growth and analytic-vs-central-difference gradients
/// at random points. Throws ValidationError on a non-finite evaluation.
ValidationReport validate_problem(const ProblemSpec& spec, const ValidationOptions& options = {});

/// Shape, finiteness, symmetry and uniform definiteness checks for LQ data.
ValidationReport validate_lq(const LQSpec& spec);

/// Maps LQ data onto the general coefficient interface with analytic gradients.
ProblemSpec lift_lq(const LQSpec& spec);

} // namespace mfgame
