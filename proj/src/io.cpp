#include "tsdyn/io.hpp"

#include "tsdyn/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace tsdyn {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double num(const Json& j, const char* key) {
  if (!j.contains(key)) throw DomainError(std::string("missing field '") + key + "'");
  if (!j.at(key).is_number()) throw DomainError(std::string("field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

double num_or(const Json& j, const char* key, double fallback) {
  return j.contains(key) ? num(j, key) : fallback;
}

int integer(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer())
    throw DomainError(std::string("field '") + key + "' must be an integer");
  return j.at(key).get<int>();
}

std::function<double(double)> scalar_fn(const std::string& name, double rate, double phase) {
  if (name == "const") return [](double) { return 1.0; };
  if (name == "sin") return [rate, phase](double t) { return std::sin(rate * t + phase); };
  if (name == "cos") return [rate, phase](double t) { return std::cos(rate * t + phase); };
  if (name == "exp") return [rate, phase](double t) { return std::exp(rate * t + phase); };
  throw DomainError("unknown function '" + name + "'");
}

template <typename Value, typename Parse>
std::function<Value(double)> timed(const Json& j, std::vector<double>& breaks, Parse parse) {
  if (j.is_object() && j.contains("pieces")) {
    const auto& ps = j.at("pieces");
    if (!ps.is_array() || ps.empty()) throw DomainError("'pieces' must be a non-empty array");
    std::vector<double> until;
    std::vector<std::function<Value(double)>> parts;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const auto& p = ps[i];
      if (!p.contains("value")) throw DomainError("piece without 'value'");
      parts.push_back(timed<Value>(p.at("value"), breaks, parse));
      if (i + 1 < ps.size()) {
        const double u = num(p, "until");
        if (!until.empty() && !(u > until.back())) throw DomainError("piece ends must increase");
        until.push_back(u);
        breaks.push_back(u);
      }
    }
    return [until, parts](double t) {
      std::size_t k = 0;
      while (k < until.size() && t >= until[k]) ++k;
      return parts[k](t);
    };
  }
  if (j.is_object() && j.contains("terms")) {
    std::vector<std::pair<Value, std::function<double(double)>>> terms;
    for (const auto& term : j.at("terms")) {
      if (!term.contains("matrix")) throw DomainError("term without 'matrix'");
      const std::string fn = term.value("fn", std::string("const"));
      terms.emplace_back(parse(term.at("matrix")),
                         scalar_fn(fn, num_or(term, "rate", 1.0), num_or(term, "phase", 0.0)));
    }
    if (terms.empty()) throw DomainError("'terms' is empty");
    return [terms](double t) {
      Value out = terms[0].first * terms[0].second(t);
      for (std::size_t i = 1; i < terms.size(); ++i) out += terms[i].first * terms[i].second(t);
      return out;
    };
  }
  const Value v = parse(j);
  return [v](double) { return v; };
}

}  // namespace

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::parse_error& e) {
    throw DomainError("'" + path + "' is not valid JSON: " + e.what());
  }
}

MatrixXd matrix_from_json(const Json& j) {
  if (j.is_number()) return MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw DomainError("matrix must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array() || j[0].empty()) throw DomainError("matrix rows must be non-empty arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  MatrixXd M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw DomainError("matrix rows have different lengths");
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[static_cast<std::size_t>(c)].is_number()) throw DomainError("matrix entries must be numbers");
      M(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return M;
}

VectorXd vector_from_json(const Json& j) {
  if (j.is_number()) return VectorXd::Constant(1, j.get<double>());
  if (!j.is_array() || j.empty()) throw DomainError("vector must be a non-empty array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw DomainError("vector entries must be numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Json to_json(const MatrixXd& M) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    out.push_back(row);
  }
  return out;
}

Json to_json(const VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json to_json(const Eigen::MatrixXcd& M) {
  return Json{{"re", to_json(MatrixXd(M.real()))}, {"im", to_json(MatrixXd(M.imag()))}};
}

TimeScaleWindow scale_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("type")) throw DomainError("scale spec needs a 'type'");
  const std::string type = j.at("type").get<std::string>();
  if (type == "uniform")
    return uniform_scale(num(j, "lo"), num(j, "hi"), num(j, "h"), num_or(j, "offset", 0.0));
  if (type == "real") return real_scale(num(j, "lo"), num(j, "hi"));
  if (type == "power") return power_scale(num(j, "base"), integer(j, "n_min"), integer(j, "n_max"));
  if (type == "components") {
    const auto& w = j.at("window");
    if (!w.is_array() || w.size() != 2) throw DomainError("'window' must be [lo, hi]");
    std::vector<Component> comps;
    for (const auto& c : j.at("components")) {
      if (c.is_number()) comps.push_back({c.get<double>(), c.get<double>()});
      else if (c.is_array() && c.size() == 1) comps.push_back({c[0].get<double>(), c[0].get<double>()});
      else if (c.is_array() && c.size() == 2) comps.push_back({c[0].get<double>(), c[1].get<double>()});
      else throw DomainError("component must be a point or [lo, hi]");
    }
    return TimeScaleWindow(w[0].get<double>(), w[1].get<double>(), std::move(comps));
  }
  if (type == "union") {
    std::vector<TimeScaleWindow> parts;
    for (const auto& p : j.at("parts")) parts.push_back(scale_from_json(p));
    return union_of(parts);
  }
  throw DomainError("unknown scale type '" + type + "'");
}

MatrixFunction matrix_function_from_json(const Json& j, int dim, std::vector<double>& breaks) {
  return timed<MatrixXd>(j, breaks, [dim](const Json& m) {
    MatrixXd M = matrix_from_json(m);
    if (M.rows() != dim || M.cols() != dim) throw DomainError("matrix does not match 'dim'");
    return M;
  });
}

VectorFunction vector_function_from_json(const Json& j, int dim, std::vector<double>& breaks) {
  return timed<VectorXd>(j, breaks, [dim](const Json& m) {
    VectorXd v = vector_from_json(m);
    if (v.size() != dim) throw DomainError("vector does not match 'dim'");
    return v;
  });
}

TimeScaleLinearSystem system_from_json(const Json& j, const std::optional<TimeScaleWindow>& scale_override) {
  if (!j.is_object()) throw DomainError("system spec must be an object");
  std::optional<TimeScaleWindow> ts = scale_override;
  if (!ts) {
    if (!j.contains("scale")) throw DomainError("system spec has no 'scale' and none was given");
    ts = scale_from_json(j.at("scale"));
  }
  const int dim = integer(j, "dim");
  if (dim < 1) throw DomainError("'dim' must be >= 1");
  if (!j.contains("A")) throw DomainError("missing field 'A'");
  std::vector<double> breaks;
  auto A = matrix_function_from_json(j.at("A"), dim, breaks);
  VectorFunction f;
  if (j.contains("f")) f = vector_function_from_json(j.at("f"), dim, breaks);
  if (j.contains("breaks"))
    for (const auto& b : j.at("breaks")) breaks.push_back(b.get<double>());
  return TimeScaleLinearSystem(std::move(*ts), dim, std::move(A), std::move(f), std::move(breaks));
}

VectorFunction forcing_from_json(const Json& j, int dim, std::vector<double>& breaks) {
  if (j.is_object() && j.contains("f")) return vector_function_from_json(j.at("f"), dim, breaks);
  return vector_function_from_json(j, dim, breaks);
}

FamilySpec family_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("system")) throw DomainError("family spec needs a 'system'");
  const Json sys_spec = j.at("system");
  const auto base = system_from_json(sys_spec);
  const int dim = base.dim();
  std::vector<MatrixFunction> dirs;
  std::vector<double> extra;
  if (j.contains("directions"))
    for (const auto& d : j.at("directions")) dirs.push_back(matrix_function_from_json(d, dim, extra));
  FamilySpec spec;
  if (!j.contains("samples") || !j.at("samples").is_array() || j.at("samples").empty())
    throw DomainError("family spec needs a non-empty 'samples' array");
  for (const auto& s : j.at("samples")) {
    VectorXd nu = vector_from_json(s);
    if (nu.size() != static_cast<Eigen::Index>(dirs.size()))
      throw DomainError("parameter sample does not match the number of directions");
    spec.family.samples.push_back(std::move(nu));
  }
  spec.family.make = [base, dirs, extra](const VectorXd& nu) {
    const MatrixFunction A = [base, dirs, nu](double t) -> MatrixXd {
      MatrixXd M = base.A(t);
      for (std::size_t i = 0; i < dirs.size(); ++i) M += nu(static_cast<Eigen::Index>(i)) * dirs[i](t);
      return M;
    };
    std::vector<double> br = base.breaks();
    br.insert(br.end(), extra.begin(), extra.end());
    VectorFunction f;
    if (base.forced()) f = [base](double t) { return base.f(t); };
    return TimeScaleLinearSystem(base.scale(), base.dim(), A, f, br);
  };
  if (j.contains("break_times"))
    for (const auto& b : j.at("break_times")) spec.break_times.push_back(b.get<double>());
  if (j.contains("lambda_hint")) spec.lambda_hint = num(j, "lambda_hint");
  return spec;
}

}  // namespace tsdyn
