#include "tsdyn/timescale.hpp"

#include "tsdyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tsdyn {

namespace {

double point_tol(double t) { return 1e-10 * std::max(1.0, std::abs(t)); }

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TimeScaleWindow::TimeScaleWindow(double window_lo, double window_hi,
                                 std::vector<Component> components)
    : window_lo_(window_lo), window_hi_(window_hi) {
  if (!(window_lo < window_hi) || !std::isfinite(window_lo) || !std::isfinite(window_hi))
    throw DomainError("time scale window requires finite lo < hi");
  if (components.empty()) throw DomainError("time scale window has no components");
  for (const auto& c : components) {
    if (!std::isfinite(c.lo) || !std::isfinite(c.hi) || c.lo > c.hi)
      throw DomainError("component [" + fmt_double(c.lo) + ", " + fmt_double(c.hi) +
                        "] is not a valid interval");
    if (c.lo < window_lo - point_tol(window_lo) || c.hi > window_hi + point_tol(window_hi))
      throw DomainError("component [" + fmt_double(c.lo) + ", " + fmt_double(c.hi) +
                        "] lies outside the window");
  }
  std::sort(components.begin(), components.end(),
            [](const Component& x, const Component& y) { return x.lo < y.lo; });
  components_.reserve(components.size());
  for (const auto& c : components) {
    if (!components_.empty() && c.lo - components_.back().hi < kMergeTol) {
      components_.back().hi = std::max(components_.back().hi, c.hi);
    } else {
      components_.push_back(c);
    }
  }
}

std::size_t TimeScaleWindow::component_of(double t) const {
  if (!std::isfinite(t)) throw DomainError("non-finite time");
  const double tol = point_tol(t);
  // First component whose left end exceeds t + tol, then step back.
  auto it = std::upper_bound(components_.begin(), components_.end(), t + tol,
                             [](double v, const Component& c) { return v < c.lo; });
  if (it != components_.begin()) {
    auto prev = std::prev(it);
    if (t <= prev->hi + tol) return static_cast<std::size_t>(prev - components_.begin());
  }
  throw DomainError("time " + fmt_double(t) + " is not on the time scale");
}

bool TimeScaleWindow::contains(double t) const {
  try {
    component_of(t);
    return true;
  } catch (const DomainError&) {
    return false;
  }
}

double TimeScaleWindow::snap(double t) const {
  const auto& c = components_[component_of(t)];
  return std::clamp(t, c.lo, c.hi);
}

std::vector<double> TimeScaleWindow::jump_points() const {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < components_.size(); ++i) out.push_back(components_[i].hi);
  return out;
}

double TimeScaleWindow::max_graininess() const {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < components_.size(); ++i)
    m = std::max(m, components_[i + 1].lo - components_[i].hi);
  return m;
}

std::vector<double> TimeScaleWindow::sampling_grid(double h) const {
  if (!(h > 0.0)) throw DomainError("sampling spacing must be positive");
  std::vector<double> grid;
  for (const auto& c : components_) {
    if (c.is_point()) {
      grid.push_back(c.lo);
      continue;
    }
    const auto n = std::max<long>(4, static_cast<long>(std::ceil(c.length() / h - 1e-9)));
    for (long k = 0; k < n; ++k) grid.push_back(c.lo + c.length() * static_cast<double>(k) / n);
    grid.push_back(c.hi);
  }
  return grid;
}

double TimeScaleWindow::distance_to(double t) const {
  auto it = std::upper_bound(components_.begin(), components_.end(), t,
                             [](double v, const Component& c) { return v < c.lo; });
  double d = std::numeric_limits<double>::infinity();
  if (it != components_.end()) d = std::min(d, it->lo - t);
  if (it != components_.begin()) {
    const auto& prev = *std::prev(it);
    d = std::min(d, t <= prev.hi ? 0.0 : t - prev.hi);
  }
  return d;
}

TimeScaleWindow uniform_scale(double lo, double hi, double h, double offset) {
  if (!(h > 0.0)) throw DomainError("uniform generator needs h > 0");
  const double eps = 1e-9;
  const auto k0 = static_cast<long>(std::ceil((lo - offset) / h - eps));
  const auto k1 = static_cast<long>(std::floor((hi - offset) / h + eps));
  std::vector<Component> comps;
  for (long k = k0; k <= k1; ++k) {
    const double t = offset + static_cast<double>(k) * h;
    comps.push_back({t, t});
  }
  if (comps.empty()) throw DomainError("uniform generator produced no points in the window");
  const double wlo = std::min(lo, comps.front().lo), whi = std::max(hi, comps.back().hi);
  return TimeScaleWindow(wlo, whi, std::move(comps));
}

TimeScaleWindow power_scale(double base, int n_min, int n_max) {
  if (!(base > 1.0) || n_min > n_max) throw DomainError("power generator needs base > 1, n_min <= n_max");
  std::vector<Component> comps;
  for (int n = n_min; n <= n_max; ++n) {
    const double t = std::pow(base, n);
    comps.push_back({t, t});
  }
  TimeScaleWindow ts(comps.front().lo, comps.back().hi + (n_min == n_max ? 1.0 : 0.0), comps);
  ts.set_syndetic_hint(false);
  return ts;
}

TimeScaleWindow real_scale(double lo, double hi) { return TimeScaleWindow(lo, hi, {{lo, hi}}); }

TimeScaleWindow union_of(const std::vector<TimeScaleWindow>& parts) {
  if (parts.empty()) throw DomainError("union of no time scales");
  double lo = parts.front().window_lo(), hi = parts.front().window_hi();
  bool syndetic = true;
  std::vector<Component> comps;
  for (const auto& p : parts) {
    lo = std::min(lo, p.window_lo());
    hi = std::max(hi, p.window_hi());
    syndetic = syndetic && p.syndetic_hint();
    comps.insert(comps.end(), p.components().begin(), p.components().end());
  }
  TimeScaleWindow ts(lo, hi, std::move(comps));
  ts.set_syndetic_hint(syndetic);
  return ts;
}

double sigma(const TimeScaleWindow& ts, double t) {
  const auto idx = ts.component_of(t);
  const auto& c = ts.components()[idx];
  if (t < c.hi - point_tol(t)) return std::max(t, c.lo);
  if (idx + 1 < ts.size()) return ts.components()[idx + 1].lo;
  return c.hi;
}

double graininess(const TimeScaleWindow& ts, double t) {
  const auto idx = ts.component_of(t);
  const auto& c = ts.components()[idx];
  if (t < c.hi - point_tol(t)) return 0.0;
  if (idx + 1 < ts.size()) return ts.components()[idx + 1].lo - c.hi;
  return 0.0;
}

Eigen::VectorXd romberg(const VectorFunction& f, double x0, double x1, double h0, double tol,
                        int max_refinements) {
  const double len = x1 - x0;
  const auto n0 = std::max<long>(1, static_cast<long>(std::ceil(len / h0 - 1e-9)));
  long n = n0;
  double h = len / static_cast<double>(n);
  Eigen::VectorXd sum = 0.5 * (f(x0) + f(x1));
  for (long k = 1; k < n; ++k) sum += f(x0 + h * static_cast<double>(k));

  std::vector<Eigen::VectorXd> prev{h * sum};
  for (int level = 1; level <= max_refinements; ++level) {
    // Midpoints of the current panels.
    for (long k = 0; k < n; ++k) sum += f(x0 + h * (static_cast<double>(k) + 0.5));
    n *= 2;
    h *= 0.5;
    std::vector<Eigen::VectorXd> row{h * sum};
    double factor = 1.0;
    for (int j = 1; j <= level; ++j) {
      factor *= 4.0;
      row.push_back(row[j - 1] + (row[j - 1] - prev[j - 1]) / (factor - 1.0));
    }
    const double change = (row.back() - prev.back()).lpNorm<Eigen::Infinity>();
    if (change < tol * std::max(1.0, row.back().lpNorm<Eigen::Infinity>()))
      return row.back();
    prev = std::move(row);
  }
  return prev.back();
}

Eigen::VectorXd delta_integral(const TimeScaleWindow& ts, const VectorFunction& f, double a,
                               double b, const QuadratureOptions& opts) {
  a = ts.snap(a);
  b = ts.snap(b);
  if (a > b) throw DomainError("delta_integral requires a <= b");
  const double h = opts.h_grid > 0.0 ? opts.h_grid : ts.default_h();

  Eigen::VectorXd total = Eigen::VectorXd::Zero(f(a).size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& c = ts.components()[i];
    if (!c.is_point()) {
      const double lo = std::max(c.lo, a), hi = std::min(c.hi, b);
      if (hi > lo) total += romberg(f, lo, hi, h, opts.quad_tol, opts.max_refinements);
    }
    if (i + 1 < ts.size()) {
      const double r = c.hi;
      if (r >= a - point_tol(r) && r < b - point_tol(r)) {
        const double mu = ts.components()[i + 1].lo - r;
        total += mu * f(r);
      }
    }
  }
  return total;
}

double delta_integral(const TimeScaleWindow& ts, const std::function<double(double)>& f, double a,
                      double b, const QuadratureOptions& opts) {
  VectorFunction vf = [&f](double t) { return Eigen::VectorXd::Constant(1, f(t)); };
  return delta_integral(ts, vf, a, b, opts)(0);
}

namespace {

double directed_hausdorff(const TimeScaleWindow& from, const TimeScaleWindow& to) {
  double d = 0.0;
  for (const auto& c : from.components()) {
    d = std::max(d, to.distance_to(c.lo));
    d = std::max(d, to.distance_to(c.hi));
  }
  // Inside an interval of `from`, distance to `to` peaks at midpoints of the gaps of `to`.
  const auto& tc = to.components();
  for (std::size_t i = 0; i + 1 < tc.size(); ++i) {
    const double mid = 0.5 * (tc[i].hi + tc[i + 1].lo);
    for (const auto& c : from.components())
      if (!c.is_point() && c.lo <= mid && mid <= c.hi) d = std::max(d, to.distance_to(mid));
  }
  return d;
}

}  // namespace

double hausdorff_distance(const TimeScaleWindow& a, const TimeScaleWindow& b) {
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

}  // namespace tsdyn
