#pragma once

#include "tsdyn/dichotomy.hpp"
#include "tsdyn/linear_timescale.hpp"
#include "tsdyn/timescale.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace tsdyn {

using Json = nlohmann::json;

/// Reads and parses a JSON file; DomainError when missing or malformed.
Json load_json_file(const std::string& path);

Eigen::MatrixXd matrix_from_json(const Json& j);
Eigen::VectorXd vector_from_json(const Json& j);
Json to_json(const Eigen::MatrixXd& M);
Json to_json(const Eigen::VectorXd& v);
Json to_json(const Eigen::MatrixXcd& M);  // {"re": [[...]], "im": [[...]]}

/// Scale spec, one of
///   {"type": "uniform", "lo", "hi", "h", "offset"?}
///   {"type": "real", "lo", "hi"}
///   {"type": "power", "base", "n_min", "n_max"}
///   {"type": "components", "window": [lo, hi], "components": [[a, b], [c], ...]}
///   {"type": "union", "parts": [spec, ...]}
TimeScaleWindow scale_from_json(const Json& j);

/// Time-dependent matrix spec: a matrix (a number when dim == 1),
/// {"terms": [{"matrix", "fn": "const"|"sin"|"cos"|"exp", "rate"?, "phase"?}, ...]}, or
/// {"pieces": [{"until": t, "value": spec}, ..., {"value": spec}]}. Piece ends are
/// appended to `breaks`.
MatrixFunction matrix_function_from_json(const Json& j, int dim, std::vector<double>& breaks);
VectorFunction vector_function_from_json(const Json& j, int dim, std::vector<double>& breaks);

/// {"scale": scale spec, "dim", "A": matrix spec, "f"?: vector spec, "breaks"?: [...]}.
/// `scale_override` replaces the embedded scale.
TimeScaleLinearSystem system_from_json(const Json& j,
                                       const std::optional<TimeScaleWindow>& scale_override = std::nullopt);

/// {"f": vector spec} or a bare vector spec.
VectorFunction forcing_from_json(const Json& j, int dim, std::vector<double>& breaks);

struct FamilySpec {
  ParameterFamily family;
  std::vector<double> break_times;  // scale times, shared by all members
  std::optional<double> lambda_hint;
};

/// {"system": system spec, "directions": [matrix spec, ...], "samples": [[nu...], ...],
///  "break_times"?: [...], "lambda_hint"?}; A(t, nu) = A(t) + sum_i nu_i D_i(t).
FamilySpec family_from_json(const Json& j);

}  // namespace tsdyn
