#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <vector>

namespace tsdyn {

using VectorFunction = std::function<Eigen::VectorXd(double)>;
using MatrixFunction = std::function<Eigen::MatrixXd(double)>;

/// A connected piece of a time scale: a closed interval [lo, hi] with lo < hi,
/// or an isolated point when lo == hi.
struct Component {
  double lo = 0.0;
  double hi = 0.0;

  bool is_point() const { return lo == hi; }
  double length() const { return hi - lo; }
};

/// Finite truncation of a time scale: an ordered list of disjoint components
/// inside [window_lo, window_hi].
///
/// Components closer than the merge tolerance are fused at construction, so
/// every gap between consecutive components is strictly positive. The maximal
/// point of the window is its own forward jump (truncation convention).
class TimeScaleWindow {
public:
  static constexpr double kMergeTol = 1e-12;

  TimeScaleWindow(double window_lo, double window_hi, std::vector<Component> components);

  double window_lo() const { return window_lo_; }
  double window_hi() const { return window_hi_; }
  const std::vector<Component>& components() const { return components_; }
  std::size_t size() const { return components_.size(); }

  double min_point() const { return components_.front().lo; }
  double max_point() const { return components_.back().hi; }

  bool contains(double t) const;

  /// Index of the component holding t; points within a relative 1e-10 of a
  /// component are accepted. Throws DomainError otherwise.
  std::size_t component_of(double t) const;

  /// Nearest point of the scale that is within tolerance of t.
  double snap(double t) const;

  /// Right endpoints that have a successor component (exactly the points with mu > 0).
  std::vector<double> jump_points() const;

  double max_graininess() const;

  /// All isolated points, all component endpoints, and interval points at a
  /// uniform spacing <= h (at least four panels per interval component).
  std::vector<double> sampling_grid(double h) const;
  std::vector<double> sampling_grid() const { return sampling_grid(default_h()); }

  double default_h() const { return 1e-2 * (window_hi_ - window_lo_); }

  /// False when the scale was generated with unbounded graininess (power grids).
  bool syndetic_hint() const { return syndetic_hint_; }
  void set_syndetic_hint(bool v) { syndetic_hint_ = v; }

  /// Point distance from t to the union of components.
  double distance_to(double t) const;

private:
  double window_lo_;
  double window_hi_;
  std::vector<Component> components_;
  bool syndetic_hint_ = true;
};

// Generators for common scales. Points outside [lo, hi] are dropped.
TimeScaleWindow uniform_scale(double lo, double hi, double h, double offset = 0.0);
TimeScaleWindow power_scale(double base, int n_min, int n_max);
TimeScaleWindow real_scale(double lo, double hi);
TimeScaleWindow union_of(const std::vector<TimeScaleWindow>& parts);

/// Forward jump: inf of scale points strictly greater than t.
double sigma(const TimeScaleWindow& ts, double t);

/// mu(t) = sigma(t) - t.
double graininess(const TimeScaleWindow& ts, double t);

struct QuadratureOptions {
  double h_grid = 0.0;  // <= 0 selects the window default
  double quad_tol = 1e-10;
  int max_refinements = 20;
};

/// Delta-integral of f over [a, b): Lebesgue part over interval components
/// (Romberg) plus the exact sum f(t_i) mu(t_i) over jump points in [a, b).
Eigen::VectorXd delta_integral(const TimeScaleWindow& ts, const VectorFunction& f, double a,
                               double b, const QuadratureOptions& opts = {});

double delta_integral(const TimeScaleWindow& ts, const std::function<double(double)>& f,
                      double a, double b, const QuadratureOptions& opts = {});

/// Two-sided Hausdorff distance between the component unions (exact).
double hausdorff_distance(const TimeScaleWindow& a, const TimeScaleWindow& b);

/// Composite trapezoid with Richardson extrapolation on [x0, x1].
Eigen::VectorXd romberg(const VectorFunction& f, double x0, double x1, double h0,
                        double tol, int max_refinements);

}  // namespace tsdyn
