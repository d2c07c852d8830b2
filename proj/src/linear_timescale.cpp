#include "tsdyn/linear_timescale.hpp"

#include "tsdyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsdyn {

namespace {

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

double sigma_min(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

double norm2(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues()(0);
}

Eigen::MatrixXd propagate_dense(const TimeScaleLinearSystem& sys, double a, double b,
                                Eigen::MatrixXd Phi, const OdeOptions& ode) {
  const auto pts = split_at(a, b, sys.breaks());
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double u = pts[k], v = pts[k + 1];
    auto rhs = [&](double t, const Eigen::MatrixXd& X) -> Eigen::MatrixXd {
      return sys.A(nudge(t, u, v)) * X;
    };
    Phi = integrate(rhs, u, v, std::move(Phi), ode);
  }
  return Phi;
}

Eigen::VectorXd propagate_dense(const TimeScaleLinearSystem& sys, double a, double b,
                                Eigen::VectorXd x, const OdeOptions& ode) {
  const auto pts = split_at(a, b, sys.breaks());
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double u = pts[k], v = pts[k + 1];
    auto rhs = [&](double t, const Eigen::VectorXd& y) -> Eigen::VectorXd {
      const double tt = nudge(t, u, v);
      Eigen::VectorXd r = sys.A(tt) * y;
      if (sys.forced()) r += sys.f(tt);
      return r;
    };
    x = integrate(rhs, u, v, std::move(x), ode);
  }
  return x;
}

Eigen::MatrixXd forward_transition(const TimeScaleLinearSystem& sys, double a, double b,
                                   const SolverOptions& opts, bool require_regressive) {
  const auto& ts = sys.scale();
  const auto n = sys.dim();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd Phi = I;
  double cur = a;
  while (true) {
    const auto idx = ts.component_of(cur);
    const auto& c = ts.components()[idx];
    const double end = std::min(c.hi, b);
    if (end > cur) {
      Phi = propagate_dense(sys, cur, end, std::move(Phi), opts.ode());
      cur = end;
    }
    if (cur >= b || idx + 1 >= ts.size()) break;
    const double mu = ts.components()[idx + 1].lo - c.hi;
    const Eigen::MatrixXd J = I + mu * sys.A(c.hi);
    if (require_regressive && !(sigma_min(J) > 1e-13 * std::max(1.0, norm2(J))))
      throw RegressivityError("E + mu*A is singular at t = " + std::to_string(c.hi) +
                              "; backward transition undefined");
    Phi = J * Phi;
    cur = ts.components()[idx + 1].lo;
  }
  return Phi;
}

}  // namespace

const Eigen::VectorXd& Trajectory::at(double t) const {
  auto it = std::lower_bound(times.begin(), times.end(), t - 1e-9 * std::max(1.0, std::abs(t)));
  if (it == times.end() || !same_time(*it, t))
    throw DomainError("trajectory has no sample at t = " + std::to_string(t));
  return values[static_cast<std::size_t>(it - times.begin())];
}

Eigen::VectorXd Trajectory::interpolate(double t) const {
  if (times.empty() || t < times.front() - 1e-12 || t > times.back() + 1e-12)
    throw DomainError("interpolation outside the trajectory range");
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.end()) return values.back();
  if (it == times.begin()) return values.front();
  const auto k = static_cast<std::size_t>(it - times.begin());
  const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
  return (1.0 - w) * values[k - 1] + w * values[k];
}

double Trajectory::sup_norm() const {
  double m = 0.0;
  for (const auto& v : values) m = std::max(m, v.norm());
  return m;
}

TimeScaleLinearSystem::TimeScaleLinearSystem(TimeScaleWindow scale, int dim, MatrixFunction A,
                                             VectorFunction f, std::vector<double> breaks)
    : scale_(std::move(scale)), dim_(dim), A_(std::move(A)), f_(std::move(f)),
      breaks_(std::move(breaks)) {
  if (dim_ < 1) throw DomainError("system dimension must be >= 1");
  if (!A_) throw DomainError("system needs a coefficient matrix function");
  std::sort(breaks_.begin(), breaks_.end());
  const auto& comps = scale_.components();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim_, dim_);
  for (std::size_t k = 0; k + 1 < comps.size(); ++k) {
    const double mu = comps[k + 1].lo - comps[k].hi;
    margin_ = (k == 0) ? sigma_min(I + mu * this->A(comps[k].hi))
                       : std::min(margin_, sigma_min(I + mu * this->A(comps[k].hi)));
  }
}

Eigen::MatrixXd TimeScaleLinearSystem::A(double t) const {
  Eigen::MatrixXd M = A_(t);
  if (M.rows() != dim_ || M.cols() != dim_) throw DomainError("A(t) has the wrong shape");
  return M;
}

Eigen::VectorXd TimeScaleLinearSystem::f(double t) const {
  if (!f_) return Eigen::VectorXd::Zero(dim_);
  Eigen::VectorXd v = f_(t);
  if (v.size() != dim_) throw DomainError("f(t) has the wrong dimension");
  return v;
}

TimeScaleLinearSystem TimeScaleLinearSystem::with_forcing(VectorFunction f) const {
  return TimeScaleLinearSystem(scale_, dim_, A_, std::move(f), breaks_);
}

TimeScaleLinearSystem TimeScaleLinearSystem::homogeneous() const {
  return TimeScaleLinearSystem(scale_, dim_, A_, {}, breaks_);
}

RegressivityReport check_regressive(const TimeScaleLinearSystem& sys, const SolverOptions&) {
  RegressivityReport rep;
  const auto& comps = sys.scale().components();
  const auto n = sys.dim();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  if (n == 1) rep.positively_regressive = true;
  bool any = false, any_jump = false;
  for (std::size_t k = 0; k + 1 < comps.size(); ++k) {
    const double r = comps[k].hi;
    const double mu = comps[k + 1].lo - r;
    const Eigen::MatrixXd M = I + mu * sys.A(r);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const double smin = svd.singularValues()(n - 1);
    const double smax = svd.singularValues()(0);
    if (!any || smin < rep.margin) {
      rep.margin = smin;
      rep.worst_time = r;
    }
    any = true;
    if (!(smin > 1e-13 * std::max(1.0, smax))) {
      rep.regressive = false;
    } else {
      rep.inverse_norm_sup = any_jump ? std::max(rep.inverse_norm_sup, 1.0 / smin) : 1.0 / smin;
    }
    any_jump = true;
    if (n == 1 && !(M(0, 0) > 0.0)) rep.positively_regressive = false;
  }
  if (!rep.regressive) rep.inverse_norm_sup = std::numeric_limits<double>::infinity();
  rep.uniformly_regressive = rep.regressive && rep.inverse_norm_sup < 1e8;
  return rep;
}

Eigen::MatrixXd transition_matrix(const TimeScaleLinearSystem& sys, double t, double tau,
                                  const SolverOptions& opts) {
  const auto& ts = sys.scale();
  t = ts.snap(t);
  tau = ts.snap(tau);
  if (t == tau) return Eigen::MatrixXd::Identity(sys.dim(), sys.dim());
  if (t > tau) return forward_transition(sys, tau, t, opts, false);
  const Eigen::MatrixXd back = forward_transition(sys, t, tau, opts, true);
  return back.partialPivLu().inverse();
}

double generalized_exp(const TimeScaleWindow& ts, const std::function<double(double)>& p, double t,
                       double s, const SolverOptions& opts) {
  t = ts.snap(t);
  s = ts.snap(s);
  if (t == s) return 1.0;
  if (t < s) return 1.0 / generalized_exp(ts, p, s, t, opts);

  const double h = opts.h_grid > 0.0 ? opts.h_grid : ts.default_h();
  const VectorFunction pv = [&p](double x) { return Eigen::VectorXd::Constant(1, p(x)); };
  // Dense part: xi_0(p) = p. Jump part: mu * xi_mu(p) = log(1 + mu p), with the
  // imaginary part i*pi of negative factors collected as a sign.
  double exponent = 0.0;
  double sign = 1.0;
  const auto& comps = ts.components();
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto& c = comps[i];
    if (!c.is_point()) {
      const double lo = std::max(c.lo, s), hi = std::min(c.hi, t);
      if (hi > lo) exponent += romberg(pv, lo, hi, h, opts.quad.quad_tol, opts.quad.max_refinements)(0);
    }
    if (i + 1 < comps.size() && c.hi >= s && c.hi < t) {
      const double mu = comps[i + 1].lo - c.hi;
      const double factor = 1.0 + mu * p(c.hi);
      if (std::abs(factor) < 1e-14)
        throw RegressivityError("p is not regressive at t = " + std::to_string(c.hi) +
                                " (1 + mu p = 0)");
      exponent += std::log(std::abs(factor));
      if (factor < 0.0) sign = -sign;
    }
  }
  return sign * std::exp(exponent);
}

Trajectory solve_forced(const TimeScaleLinearSystem& sys, const Eigen::VectorXd& x0, double t_from,
                        double t_to, const SolverOptions& opts) {
  const auto& ts = sys.scale();
  t_from = ts.snap(t_from);
  t_to = ts.snap(t_to);
  if (t_from > t_to) throw DomainError("solve_forced requires t_from <= t_to");
  if (x0.size() != sys.dim()) throw DomainError("initial state has the wrong dimension");

  const double h = opts.h_grid > 0.0 ? opts.h_grid : ts.default_h();
  std::vector<double> grid{t_from};
  for (double g : ts.sampling_grid(h))
    if (g > t_from && g < t_to && !same_time(g, t_from) && !same_time(g, t_to)) grid.push_back(g);
  if (t_to > t_from) grid.push_back(t_to);

  const auto n = sys.dim();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Trajectory out;
  out.times.push_back(grid.front());
  out.values.push_back(x0);
  Eigen::VectorXd x = x0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double a = grid[k], b = grid[k + 1];
    const auto ia = ts.component_of(a);
    const auto& c = ts.components()[ia];
    if (b <= c.hi) {
      x = propagate_dense(sys, a, b, std::move(x), opts.ode());
    } else {
      // a is the right end of its component, b the left end of the next one.
      const double mu = b - a;
      x = (I + mu * sys.A(a)) * x + mu * sys.f(a);
    }
    out.times.push_back(b);
    out.values.push_back(x);
  }
  return out;
}

std::string to_string(StabilityVerdict v) {
  switch (v) {
    case StabilityVerdict::Stable: return "stable";
    case StabilityVerdict::UniformlyStable: return "uniformly_stable";
    case StabilityVerdict::Unstable: return "unstable";
    case StabilityVerdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

StabilityReport classify_stability(const TimeScaleLinearSystem& sys, const StabilityOptions& opts) {
  const auto& ts = sys.scale();
  const double h = opts.solver.h_grid > 0.0 ? opts.solver.h_grid : ts.default_h();
  std::vector<double> grid = ts.sampling_grid(h);
  if (grid.size() > opts.max_grid) {
    std::vector<double> sub;
    const double stride = static_cast<double>(grid.size() - 1) / static_cast<double>(opts.max_grid - 1);
    for (std::size_t k = 0; k < opts.max_grid; ++k)
      sub.push_back(grid[static_cast<std::size_t>(std::lround(stride * static_cast<double>(k)))]);
    grid = std::move(sub);
  }
  const std::size_t N = grid.size();
  std::vector<Eigen::MatrixXd> steps(N - 1);
  for (std::size_t k = 0; k + 1 < N; ++k)
    steps[k] = transition_matrix(sys, grid[k + 1], grid[k], opts.solver);

  StabilityReport rep;
  rep.grid_points = N;
  const std::size_t half = N / 2;
  for (std::size_t i = 0; i < N; ++i) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(sys.dim(), sys.dim());
    for (std::size_t j = i; j < N; ++j) {
      if (j > i) P = steps[j - 1] * P;
      const double nrm = norm2(P);
      rep.gamma = std::max(rep.gamma, nrm);
      if (j <= half) rep.gamma_first_half = std::max(rep.gamma_first_half, nrm);
      if (i == 0) {
        rep.sup_from_start = std::max(rep.sup_from_start, nrm);
        if (j <= half) rep.sup_from_start_first_half = std::max(rep.sup_from_start_first_half, nrm);
      }
    }
  }

  const double r = rep.sup_from_start / std::max(1.0, rep.sup_from_start_first_half);
  const double q = rep.gamma / std::max(1.0, rep.gamma_first_half);
  if (r >= opts.growth_ratio) {
    rep.verdict = StabilityVerdict::Unstable;
  } else if (r > opts.bounded_ratio) {
    rep.verdict = StabilityVerdict::Inconclusive;
  } else if (q <= opts.bounded_ratio) {
    rep.verdict = StabilityVerdict::UniformlyStable;
  } else if (q >= opts.growth_ratio) {
    rep.verdict = StabilityVerdict::Stable;
  } else {
    rep.verdict = StabilityVerdict::Inconclusive;
  }
  return rep;
}

}  // namespace tsdyn
