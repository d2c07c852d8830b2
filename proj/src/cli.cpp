#include "tsdyn/cli.hpp"

#include "tsdyn/bounded_solutions.hpp"
#include "tsdyn/dichotomy.hpp"
#include "tsdyn/embedding.hpp"
#include "tsdyn/errors.hpp"
#include "tsdyn/io.hpp"
#include "tsdyn/linear_timescale.hpp"
#include "tsdyn/matrix_functions.hpp"
#include "tsdyn/renormalization.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace tsdyn {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct RunConfig {
  std::string scale_path, system_path, forcing_path, family_path, out_path;
  std::string matrix_text, x0_text, breaks_text;
  double h_grid = 0.0, ode_tol = 0.0, quad_tol = 0.0, gap_tol = 0.0, a_cap = 0.0, lambda_hint = 0.0;
  bool complex_allowed = false;
  bool no_operator_bound = false;
  double mu = 0.0, a = 0.0, lambda = 0.0, alpha = 0.0;
  std::optional<double> t, t0, t1;
  std::size_t pairs = 50, samples = 0;
  std::uint64_t seed = 1;
};

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json num_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <typename T>
Json opt_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DomainError("cannot write '" + path + "'");
    f << content;
    if (!f) throw DomainError("cannot write '" + path + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DomainError("cannot move output into '" + path + "': " + ec.message());
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string csv() const {
    std::string s;
    for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
    s += "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + g17(r[i]);
      s += "\n";
    }
    return s;
  }
};

void emit(const RunConfig& cfg, std::ostream& out, Json result, const Table* table = nullptr) {
  if (!cfg.out_path.empty()) {
    if (table) {
      write_atomic(cfg.out_path, table->csv());
      write_atomic(cfg.out_path + ".json", result.dump(2) + "\n");
      result["csv"] = cfg.out_path;
    } else {
      write_atomic(cfg.out_path, result.dump(2) + "\n");
    }
  }
  out << result.dump(2) << "\n";
}

SolverOptions solver_options(const RunConfig& c) {
  SolverOptions o;
  if (c.ode_tol > 0) o.ode_tol = c.ode_tol;
  if (c.h_grid > 0) o.h_grid = c.h_grid;
  o.quad.h_grid = o.h_grid;
  if (c.quad_tol > 0) o.quad.quad_tol = c.quad_tol;
  return o;
}

OdeOptions ode_options(const RunConfig& c) {
  OdeOptions o{1e-11, 1e-13, 2'000'000};
  if (c.ode_tol > 0) o = OdeOptions{c.ode_tol, c.ode_tol * 1e-2, 2'000'000};
  return o;
}

DichotomyOptions dichotomy_options(const RunConfig& c) {
  DichotomyOptions o;
  if (c.gap_tol > 0) o.gap_tol = c.gap_tol;
  if (c.a_cap > 0) o.a_cap = c.a_cap;
  if (c.h_grid > 0) o.h_grid = c.h_grid;
  o.ode = ode_options(c);
  return o;
}

std::optional<double> hint(const RunConfig& c) {
  return c.lambda_hint > 0 ? std::optional<double>(c.lambda_hint) : std::nullopt;
}

LogMode mode(const RunConfig& c) { return c.complex_allowed ? LogMode::ComplexAllowed : LogMode::Real; }

TimeScaleLinearSystem load_system(const RunConfig& c) {
  if (c.system_path.empty()) throw DomainError("--system is required");
  std::optional<TimeScaleWindow> scale;
  if (!c.scale_path.empty()) scale = scale_from_json(load_json_file(c.scale_path));
  auto sys = system_from_json(load_json_file(c.system_path), scale);
  if (!c.forcing_path.empty()) {
    std::vector<double> br;
    auto f = forcing_from_json(load_json_file(c.forcing_path), sys.dim(), br);
    br.insert(br.begin(), sys.breaks().begin(), sys.breaks().end());
    sys = TimeScaleLinearSystem(sys.scale(), sys.dim(), [sys](double t) { return sys.A(t); }, std::move(f),
                                std::move(br));
  }
  return sys;
}

std::vector<double> parse_list(const std::string& text) {
  if (text.empty()) return {};
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error&) {
    throw DomainError("expected a JSON list, got '" + text + "'");
  }
  if (j.is_number()) return {j.get<double>()};
  const VectorXd v = vector_from_json(j);
  return {v.data(), v.data() + v.size()};
}

MatrixXd parse_matrix(const std::string& text) {
  if (text.empty()) throw DomainError("--matrix is required");
  try {
    return matrix_from_json(Json::parse(text));
  } catch (const Json::parse_error&) {
    throw DomainError("--matrix is not valid JSON");
  }
}

Json regressivity_json(const RegressivityReport& r) {
  return Json{{"regressive", r.regressive},
              {"positively_regressive", opt_json(r.positively_regressive)},
              {"uniformly_regressive", r.uniformly_regressive},
              {"margin", r.margin},
              {"inverse_norm_sup", num_or_null(r.inverse_norm_sup)},
              {"worst_time", opt_json(r.worst_time)}};
}

void require_regressive(const TimeScaleLinearSystem& sys, const SolverOptions& o) {
  const auto r = check_regressive(sys, o);
  if (!r.regressive)
    throw RegressivityError("system is not regressive: E + mu A is singular at t = " +
                            g17(r.worst_time.value_or(std::nan(""))));
}

// --- subcommands ------------------------------------------------------------

int cmd_info(const RunConfig& c, std::ostream& out) {
  std::optional<TimeScaleLinearSystem> sys;
  std::optional<TimeScaleWindow> ts;
  if (!c.system_path.empty()) {
    sys = load_system(c);
    ts = sys->scale();
  } else if (!c.scale_path.empty()) {
    ts = scale_from_json(load_json_file(c.scale_path));
  } else {
    throw DomainError("info needs --scale or --system");
  }
  std::size_t points = 0;
  for (const auto& comp : ts->components()) points += comp.is_point() ? 1 : 0;
  Json j{{"window", {ts->window_lo(), ts->window_hi()}},
         {"components", ts->size()},
         {"isolated_points", points},
         {"intervals", ts->size() - points},
         {"min_point", ts->min_point()},
         {"max_point", ts->max_point()},
         {"jump_points", ts->jump_points().size()},
         {"max_graininess", ts->max_graininess()},
         {"syndetic", ts->syndetic_hint()}};
  if (sys) {
    j["dim"] = sys->dim();
    j["forced"] = sys->forced();
    j["regressivity"] = regressivity_json(check_regressive(*sys, solver_options(c)));
  }
  emit(c, out, j);
  return kExitOk;
}

int cmd_renorm(const RunConfig& c, std::ostream& out) {
  const TimeScaleWindow ts = !c.system_path.empty() ? load_system(c).scale()
                             : !c.scale_path.empty() ? scale_from_json(load_json_file(c.scale_path))
                                                     : throw DomainError("renorm needs --scale or --system");
  const auto map = build_renormalization(ts);
  Json bps = Json::array();
  for (const auto& b : map.breakpoints()) bps.push_back({b.t, b.s});
  Json j{{"t0", map.t0()},         {"anchor_shifted", map.anchor_shifted()},
         {"s_min", map.s_min()},   {"s_max", map.s_max()},
         {"jump_count", map.jump_count()}, {"breakpoints", bps}};
  Table tab{{"t", "s"}, {}};
  for (double t : ts.sampling_grid(c.h_grid > 0 ? c.h_grid : ts.default_h())) tab.rows.push_back({t, map.apply(t)});
  emit(c, out, j, &tab);
  return kExitOk;
}

int cmd_embed(const RunConfig& c, std::ostream& out) {
  const auto sys = load_system(c);
  const auto emb = embed(sys, mode(c));
  const auto rep = check_condition_one(emb, c.h_grid);
  Json gaps = Json::array();
  for (const auto& g : emb.gaps()) {
    Json gj{{"t1", g.t1}, {"mu", g.mu}, {"s_lo", g.s_lo}, {"s_hi", g.s_hi}};
    if (emb.real_valued()) gj["B"] = to_json(MatrixXd(g.B.real()));
    else gj["B"] = to_json(g.B);
    gaps.push_back(gj);
  }
  Json j{{"dim", emb.dim()},
         {"mode", c.complex_allowed ? "complex-allowed" : "real"},
         {"real_valued", emb.real_valued()},
         {"s_min", emb.s_min()},
         {"s_max", emb.s_max()},
         {"gaps", gaps},
         {"condition_I",
          {{"holds", rep.holds},
           {"regressive", rep.regressive},
           {"uniformly_regressive", rep.uniformly_regressive},
           {"sup_A_norm", rep.sup_A_norm},
           {"sup_inverse_norm", num_or_null(rep.sup_inverse_norm)},
           {"syndetic", rep.syndetic},
           {"max_graininess", rep.max_graininess},
           {"A_invertible", rep.A_invertible},
           {"sup_A_inverse_norm", num_or_null(rep.sup_A_inverse_norm)},
           {"sup_B_norm", rep.sup_B_norm},
           {"sup_g_norm", rep.sup_g_norm},
           {"note", rep.note}}}};
  const int n = emb.dim();
  Table tab;
  tab.header.push_back("s");
  for (int r = 0; r < n; ++r)
    for (int k = 0; k < n; ++k) tab.header.push_back("B" + std::to_string(r) + std::to_string(k));
  if (!emb.real_valued())
    for (int r = 0; r < n; ++r)
      for (int k = 0; k < n; ++k) tab.header.push_back("B" + std::to_string(r) + std::to_string(k) + "_im");
  if (sys.forced())
    for (int r = 0; r < n; ++r) tab.header.push_back("g" + std::to_string(r));
  const double h = c.h_grid > 0 ? c.h_grid : (emb.s_max() - emb.s_min()) / 200.0;
  for (double s : emb.sample_grid(h)) {
    std::vector<double> row{s};
    const Eigen::MatrixXcd B = emb.B(s);
    for (int r = 0; r < n; ++r)
      for (int k = 0; k < n; ++k) row.push_back(B(r, k).real());
    if (!emb.real_valued())
      for (int r = 0; r < n; ++r)
        for (int k = 0; k < n; ++k) row.push_back(B(r, k).imag());
    if (sys.forced()) {
      const Eigen::VectorXcd g = emb.g(s);
      for (int r = 0; r < n; ++r) row.push_back(g(r).real());
    }
    tab.rows.push_back(std::move(row));
  }
  emit(c, out, j, &tab);
  return kExitOk;
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
  const auto sys = load_system(c);
  const auto emb = embed(sys, mode(c));
  VerifyOptions vo;
  vo.n_pairs = c.pairs;
  vo.seed = c.seed;
  vo.ode = ode_options(c);
  const auto rep = verify_embedding(sys, emb, vo);
  const bool passed = rep.max_deviation <= 1e-6 && rep.solution_deviation <= 1e-6;
  Json j{{"pairs", rep.pairs},
         {"max_deviation", rep.max_deviation},
         {"worst_t", opt_json(rep.worst_t)},
         {"worst_tau", opt_json(rep.worst_tau)},
         {"solution_deviation", rep.solution_deviation},
         {"max_gap_exp_residual", rep.max_gap_exp_residual},
         {"max_gap_forcing_residual", rep.max_gap_forcing_residual},
         {"tolerance", 1e-6},
         {"passed", passed}};
  emit(c, out, j);
  return passed ? kExitOk : kExitCertification;
}

int cmd_matfun(const RunConfig& c, std::ostream& out, bool phi) {
  const MatrixXd A = parse_matrix(c.matrix_text);
  Json j{{"mu", c.mu}, {"function", phi ? "phi" : "log_one_plus"}};
  if (c.complex_allowed) {
    j["result"] = to_json(Eigen::MatrixXcd(phi ? phi_fun_complex(c.mu, A) : log_one_plus_complex(c.mu, A)));
  } else {
    j["result"] = to_json(MatrixXd(phi ? phi_fun(c.mu, A) : log_one_plus(c.mu, A)));
  }
  emit(c, out, j);
  return kExitOk;
}

int cmd_exp(const RunConfig& c, std::ostream& out) {
  const auto sys = load_system(c);
  const auto& ts = sys.scale();
  const auto so = solver_options(c);
  const double t0 = c.t0.value_or(ts.min_point());
  const double t = c.t.value_or(ts.max_point());
  require_regressive(sys, so);
  Json j{{"t", t}, {"t0", t0}};
  if (sys.dim() == 1) {
    j["value"] = generalized_exp(ts, [&sys](double x) { return sys.A(x)(0, 0); }, t, t0, so);
  } else {
    j["transition"] = to_json(transition_matrix(sys, t, t0, so));
  }
  emit(c, out, j);
  return kExitOk;
}

int cmd_solve(const RunConfig& c, std::ostream& out) {
  const auto sys = load_system(c);
  const auto& ts = sys.scale();
  const VectorXd x0 = c.x0_text.empty() ? VectorXd::Zero(sys.dim()) : vector_from_json(Json::parse(c.x0_text));
  const double t0 = c.t0.value_or(ts.min_point());
  const double t1 = c.t1.value_or(ts.max_point());
  const auto tr = solve_forced(sys, x0, t0, t1, solver_options(c));
  Table tab;
  tab.header.push_back("t");
  for (int i = 0; i < sys.dim(); ++i) tab.header.push_back("x" + std::to_string(i));
  for (std::size_t k = 0; k < tr.size(); ++k) {
    std::vector<double> row{tr.times[k]};
    for (int i = 0; i < sys.dim(); ++i) row.push_back(tr.values[k](i));
    tab.rows.push_back(std::move(row));
  }
  Json j{{"samples", tr.size()}, {"t0", t0}, {"t1", t1}, {"final", to_json(tr.values.back())},
         {"sup_norm", tr.sup_norm()}};
  emit(c, out, j, &tab);
  return kExitOk;
}

int cmd_stability(const RunConfig& c, std::ostream& out) {
  const auto sys = load_system(c);
  StabilityOptions so;
  so.solver = solver_options(c);
  const auto rep = classify_stability(sys, so);
  Json j{{"verdict", to_string(rep.verdict)},
         {"gamma", rep.gamma},
         {"gamma_first_half", rep.gamma_first_half},
         {"sup_from_start", rep.sup_from_start},
         {"sup_from_start_first_half", rep.sup_from_start_first_half},
         {"grid_points", rep.grid_points}};
  emit(c, out, j);
  return kExitOk;
}

Json profile_json(const DichotomyProfile& p, const EmbeddedSystem& emb) {
  Json segs = Json::array();
  for (std::size_t i = 0; i < p.results.size(); ++i) {
    const auto& r = p.results[i];
    Json s{{"s_lo", p.breaks[i]},
           {"s_hi", p.breaks[i + 1]},
           {"t_lo", emb.map().invert(p.breaks[i])},
           {"t_hi", emb.map().invert(p.breaks[i + 1])},
           {"hyperbolic", r.hyperbolic},
           {"reason", r.reason}};
    if (r.segment) {
      const auto& g = *r.segment;
      s["dim_s"] = g.dim_s;
      s["dim_u"] = g.dim_u;
      s["a"] = g.a;
      s["lambda"] = g.lambda;
      s["constant_B"] = g.constant_B;
      s["gap_ratio"] = num_or_null(g.gap_ratio);
      s["invariance_error"] = g.invariance_error;
    }
    segs.push_back(s);
  }
  Json j{{"holds", p.holds()},
         {"condition_II", p.condition_II},
         {"condition_III", p.condition_III},
         {"condition_IV", p.condition_IV},
         {"dims_s", p.dims_s},
         {"angles", p.angles},
         {"alpha", p.alpha},
         {"a", p.a},
         {"lambda", p.lambda},
         {"min_segment_length", p.min_segment_length},
         {"segments", segs},
         {"diagnostics", p.diagnostics}};
  if (p.holds() && p.lambda > 0 && p.alpha > 0) j["threshold"] = threshold_T(p.a, p.lambda, p.alpha);
  return j;
}

std::vector<double> s_breaks(const EmbeddedSystem& emb, const std::string& text) {
  std::vector<double> out;
  const auto& ts = emb.system().scale();
  for (double t : parse_list(text)) out.push_back(emb.map().apply(ts.snap(t)));
  return out;
}

int cmd_dichotomy(const RunConfig& c, std::ostream& out) {
  const auto sys = load_system(c);
  const auto emb = embed(sys, LogMode::Real);
  const auto prof = build_profile(emb, s_breaks(emb, c.breaks_text), hint(c), dichotomy_options(c));
  emit(c, out, profile_json(prof, emb));
  return kExitOk;
}

int cmd_threshold(const RunConfig& c, std::ostream& out) {
  constexpr double kHalfPi = 1.57079632679489661923;
  const double alpha = (c.alpha > kHalfPi && c.alpha <= kHalfPi + 1e-4) ? kHalfPi : c.alpha;
  const double T = threshold_T(c.a, c.lambda, alpha);
  emit(c, out, Json{{"a", c.a}, {"lambda", c.lambda}, {"alpha", c.alpha}, {"alpha_used", alpha}, {"T", T}});
  return kExitOk;
}

int cmd_solve_bounded(const RunConfig& c, std::ostream& out) {
  const auto sys = load_system(c);
  if (!sys.forced()) throw DomainError("solve-bounded needs a forcing (--forcing or 'f' in the system)");
  const auto emb = embed(sys, LogMode::Real);
  const auto prof = build_profile(emb, s_breaks(emb, c.breaks_text), hint(c), dichotomy_options(c));
  if (!prof.holds()) {
    std::string why;
    for (const auto& d : prof.diagnostics) why += (why.empty() ? "" : "; ") + d;
    throw ConditionViolation("dichotomy profile fails: " + (why.empty() ? std::string("conditions II-IV") : why));
  }
  BoundedOptions bo;
  bo.ode = ode_options(c);
  bo.operator_bound = !c.no_operator_bound;
  auto res = solve_bounded_profile(emb, prof, bo);
  std::optional<double> agree;
  if (prof.results.size() == 1) {
    const auto single = solve_bounded_single(emb, prof.segment(0), bo);
    double d = 0.0;
    for (std::size_t k = 0; k < res.psi.size(); ++k) d = std::max(d, (res.psi.values[k] - single.psi.values[k]).norm());
    agree = d;
  }
  res = pull_back_and_certify(std::move(res), emb, sys, bo);
  Table tab;
  tab.header.push_back("t");
  for (int i = 0; i < sys.dim(); ++i) tab.header.push_back("phi" + std::to_string(i));
  for (std::size_t k = 0; k < res.phi.size(); ++k) {
    std::vector<double> row{res.phi.times[k]};
    for (int i = 0; i < sys.dim(); ++i) row.push_back(res.phi.values[k](i));
    tab.rows.push_back(std::move(row));
  }
  Json j{{"method", res.method},
         {"certified", res.certified},
         {"K", res.K},
         {"operator_bound", opt_json(res.operator_bound)},
         {"forcing_sup", res.forcing_sup},
         {"ode_residual", res.ode_residual},
         {"max_jump_residual", res.max_jump_residual},
         {"worst_jump_time", opt_json(res.worst_jump_time)},
         {"max_dense_residual", res.max_dense_residual},
         {"worst_dense_time", opt_json(res.worst_dense_time)},
         {"single_vs_collocation", opt_json(agree)},
         {"warnings", res.warnings},
         {"samples", res.phi.size()},
         {"profile", profile_json(prof, emb)}};
  emit(c, out, j, &tab);
  return kExitOk;
}

int cmd_check_family(const RunConfig& c, std::ostream& out) {
  if (c.family_path.empty()) throw DomainError("--family is required");
  const auto spec = family_from_json(load_json_file(c.family_path));
  const auto bt = spec.break_times;
  const auto rep = check_family(spec.family, [bt](const VectorXd&) { return bt; }, c.samples,
                                c.lambda_hint > 0 ? hint(c) : spec.lambda_hint, dichotomy_options(c), mode(c));
  Json members = Json::array();
  for (const auto& m : rep.members) {
    Json mj{{"nu", to_json(m.nu)}, {"ok", m.ok}, {"error", m.error}};
    if (m.profile) {
      mj["a"] = m.profile->a;
      mj["lambda"] = m.profile->lambda;
      mj["alpha"] = m.profile->alpha;
      mj["dims_s"] = m.profile->dims_s;
    }
    members.push_back(mj);
  }
  Json j{{"all_hold", rep.all_hold},
         {"a", rep.a},
         {"lambda", rep.lambda},
         {"alpha", rep.alpha},
         {"threshold", num_or_null(rep.threshold)},
         {"min_segment_length", rep.min_segment_length},
         {"segments_exceed_threshold", rep.segments_exceed_threshold},
         {"notes", rep.notes},
         {"members", members}};
  emit(c, out, j);
  return kExitOk;
}

int fail(std::ostream& err, int code, const std::string& kind, const std::string& msg) {
  err << Json{{"error", kind}, {"message", msg}, {"exit_code", code}}.dump() << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Linear dynamics on time scales", "tsdyn"};
  app.require_subcommand(1);

  auto common = [&cfg](CLI::App* s) {
    s->add_option("--out", cfg.out_path, "write results to PATH (CSV plus PATH.json)");
    s->add_option("--h-grid", cfg.h_grid, "sample spacing")->check(CLI::PositiveNumber);
    s->add_option("--ode-tol", cfg.ode_tol, "ODE relative tolerance")->check(CLI::PositiveNumber);
    s->add_option("--quad-tol", cfg.quad_tol, "quadrature tolerance")->check(CLI::PositiveNumber);
  };
  auto system_opts = [&cfg, &common](CLI::App* s) {
    common(s);
    s->add_option("--system", cfg.system_path, "system spec (JSON)");
    s->add_option("--scale", cfg.scale_path, "scale spec (JSON); overrides the system's scale");
    s->add_option("--forcing", cfg.forcing_path, "forcing spec (JSON)");
  };
  auto dich_opts = [&cfg](CLI::App* s) {
    s->add_option("--gap-tol", cfg.gap_tol, "growth-rate gap ratio")->check(CLI::PositiveNumber);
    s->add_option("--a-cap", cfg.a_cap, "largest admissible prefactor")->check(CLI::PositiveNumber);
    s->add_option("--lambda-hint", cfg.lambda_hint, "cap on the decay rate")->check(CLI::PositiveNumber);
  };

  auto* info = app.add_subcommand("info", "summary of a scale or system");
  system_opts(info);
  auto* renorm = app.add_subcommand("renorm", "renormalized time s(t)");
  system_opts(renorm);
  auto* emb = app.add_subcommand("embed", "ODE embedding and Condition I");
  system_opts(emb);
  emb->add_flag("--complex", cfg.complex_allowed, "allow complex logarithms");
  auto* ver = app.add_subcommand("verify-embedding", "compare transition matrices with the embedding");
  system_opts(ver);
  ver->add_flag("--complex", cfg.complex_allowed, "allow complex logarithms");
  ver->add_option("--pairs", cfg.pairs, "number of sampled pairs");
  ver->add_option("--seed", cfg.seed, "random seed");
  auto* phi = app.add_subcommand("phi", "A^{-1} Ln(E + mu A), extended to singular A");
  auto* matlog = app.add_subcommand("matlog", "Ln(E + mu A)");
  for (auto* s : {phi, matlog}) {
    common(s);
    s->add_option("--mu", cfg.mu, "graininess")->required()->check(CLI::PositiveNumber);
    s->add_option("--matrix", cfg.matrix_text, "matrix as JSON rows")->required();
    s->add_flag("--complex", cfg.complex_allowed, "allow complex logarithms");
  }
  auto* exp = app.add_subcommand("exp", "generalized exponential or transition matrix");
  system_opts(exp);
  exp->add_option("--t", cfg.t, "final time");
  exp->add_option("--t0", cfg.t0, "initial time");
  auto* solve = app.add_subcommand("solve", "forward solution on the scale");
  system_opts(solve);
  solve->add_option("--x0", cfg.x0_text, "initial state as a JSON list");
  solve->add_option("--t0", cfg.t0, "initial time");
  solve->add_option("--t1", cfg.t1, "final time");
  auto* stab = app.add_subcommand("stability", "window stability verdict");
  system_opts(stab);
  auto* dich = app.add_subcommand("dichotomy", "dichotomy profile of the embedded system");
  system_opts(dich);
  dich_opts(dich);
  dich->add_option("--breaks", cfg.breaks_text, "interior break times (scale time, JSON list)");
  auto* thr = app.add_subcommand("threshold", "segment-length threshold T(a, lambda, alpha)");
  common(thr);
  thr->add_option("--a", cfg.a, "dichotomy prefactor")->required();
  thr->add_option("--lambda", cfg.lambda, "dichotomy rate")->required();
  thr->add_option("--alpha", cfg.alpha, "transversality angle")->required();
  auto* sb = app.add_subcommand("solve-bounded", "bounded solution of the forced system");
  system_opts(sb);
  dich_opts(sb);
  sb->add_option("--breaks", cfg.breaks_text, "interior break times (scale time, JSON list)");
  sb->add_flag("--no-operator-bound", cfg.no_operator_bound, "skip the forcing-independent bound");
  auto* fam = app.add_subcommand("check-family", "Conditions II-IV over sampled parameters");
  common(fam);
  dich_opts(fam);
  fam->add_option("--family", cfg.family_path, "family spec (JSON)")->required();
  fam->add_option("--samples", cfg.samples, "use at most this many samples (0: all)");
  fam->add_flag("--complex", cfg.complex_allowed, "allow complex logarithms");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return fail(err, kExitInput, "UsageError", e.what());
  }

  try {
    if (*info) return cmd_info(cfg, out);
    if (*renorm) return cmd_renorm(cfg, out);
    if (*emb) return cmd_embed(cfg, out);
    if (*ver) return cmd_verify(cfg, out);
    if (*phi) return cmd_matfun(cfg, out, true);
    if (*matlog) return cmd_matfun(cfg, out, false);
    if (*exp) return cmd_exp(cfg, out);
    if (*solve) return cmd_solve(cfg, out);
    if (*stab) return cmd_stability(cfg, out);
    if (*dich) return cmd_dichotomy(cfg, out);
    if (*thr) return cmd_threshold(cfg, out);
    if (*sb) return cmd_solve_bounded(cfg, out);
    if (*fam) return cmd_check_family(cfg, out);
    return fail(err, kExitInput, "UsageError", "no subcommand");
  } catch (const DomainError& e) {
    return fail(err, kExitInput, "DomainError", e.what());
  } catch (const Json::exception& e) {
    return fail(err, kExitInput, "InputError", e.what());
  } catch (const RegressivityError& e) {
    return fail(err, kExitCondition, "RegressivityError", e.what());
  } catch (const BranchError& e) {
    return fail(err, kExitCondition, "BranchError", e.what());
  } catch (const ConditionViolation& e) {
    return fail(err, kExitCondition, "ConditionViolation", e.what());
  } catch (const CertificationError& e) {
    return fail(err, kExitCertification, "CertificationError", e.what());
  } catch (const std::exception& e) {
    return fail(err, kExitCertification, "NumericalError", e.what());
  }
}

}  // namespace tsdyn
