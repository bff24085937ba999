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

#include "mfgame/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace mfgame {

/// A problem read from a JSON document. LQ documents keep their matrix data
/// alongside the lifted general form.
struct ProblemDocument {
    std::string type;  ///< "lq" or "general"
    ProblemSpec problem;
    std::optional<LQSpec> lq;

    bool is_lq() const { return lq.has_value(); }
};

/// Parses a problem document. Malformed JSON and schema violations throw
/// ValidationError; JSON syntax errors report line and column.
ProblemDocument parse_problem(const std::string& text);
ProblemDocument load_problem(const std::filesystem::path& path);

/// LQ schema:
///   {"type": "lq", "n", "k1", "k2", "T", "a": [..],
///    "matrices": {name: value | {"times": [..], "values": [value, ..]}}}
/// where a value is a number (1x1 only), a flat array (a row or a column)
/// or an array of rows. N11, N21, Q and M are required, everything else
/// defaults to zero; Q, h and M may also sit at the top level.
LQSpec parse_lq(const nlohmann::json& doc);

/// General schema: as above with
///   "coefficients": {"b", "g", "gtilde": vector family, "h", "l": scalar family,
///                    "m": terminal family, "control_set1"/"control_set2": box}
/// Families (all parameters optional unless noted, arrays follow the value rules):
///   vector  zero | linear{c, x, y, u1, v1, u2, v2} | bilinear{S, w1, w2, c}
///           | sine{amplitude, phase, x, y, u1, v1, u2, v2}
///           (sine: amplitude_j * sin(phase_j + sum_a (K_a a)_j))
///   h       zero | constant{value} | linear{c, x, y, u1, v1, u2, v2}
///           | tanh{amplitude, c, x, ...}  (amplitude * tanh(c + sum_a <w_a, a>))
///   l       zero | constant{value} | quadratic{c, x, ..., Px, Py, Pu1, Pv1, Pu2, Pv2}
///           (c + sum_a <w_a, a> + sum_a a^T P_a a)
///   m       zero | linear{c, x, y} | quadratic{c, x, y, Px, Py, Pxy}
///   box     {lower: [..], upper: [..]}
ProblemSpec parse_general(const nlohmann::json& doc);

} // namespace mfgame
