#pragma once

#include "tsdyn/ode.hpp"
#include "tsdyn/timescale.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tsdyn {

/// Sampled solution: values at increasing times.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;

  std::size_t size() const { return times.size(); }
  /// Value at a sample time (relative tolerance 1e-9); DomainError if absent.
  const Eigen::VectorXd& at(double t) const;
  /// Linear interpolation between samples; DomainError outside the range.
  Eigen::VectorXd interpolate(double t) const;
  double sup_norm() const;
};

/// x^Delta = A(t) x + f(t) on a time-scale window.
class TimeScaleLinearSystem {
public:
  /// `breaks` lists times where A or f may be discontinuous inside interval components.
  TimeScaleLinearSystem(TimeScaleWindow scale, int dim, MatrixFunction A, VectorFunction f = {},
                        std::vector<double> breaks = {});

  int dim() const { return dim_; }
  const TimeScaleWindow& scale() const { return scale_; }
  Eigen::MatrixXd A(double t) const;
  Eigen::VectorXd f(double t) const;
  bool forced() const { return static_cast<bool>(f_); }
  const std::vector<double>& breaks() const { return breaks_; }

  /// min over jump points of sigma_min(E + mu A); 1 when the scale has no jumps.
  double regressivity_margin() const { return margin_; }

  TimeScaleLinearSystem with_forcing(VectorFunction f) const;
  TimeScaleLinearSystem homogeneous() const;

private:
  TimeScaleWindow scale_;
  int dim_;
  MatrixFunction A_;
  VectorFunction f_;
  std::vector<double> breaks_;
  double margin_ = 1.0;
};

struct SolverOptions {
  double ode_tol = 1e-10;
  double h_grid = 0.0;  // <= 0: window default
  QuadratureOptions quad{};

  OdeOptions ode() const { return OdeOptions{ode_tol, ode_tol * 1e-2, 2'000'000}; }
};

struct RegressivityReport {
  bool regressive = true;
  std::optional<bool> positively_regressive;  // scalar systems only
  bool uniformly_regressive = true;
  double margin = 1.0;         // min sigma_min(E + mu A) over the grid
  double inverse_norm_sup = 1.0;  // max ||(E + mu A)^{-1}||_2
  std::optional<double> worst_time;
};

RegressivityReport check_regressive(const TimeScaleLinearSystem& sys, const SolverOptions& opts = {});

/// Phi(t, tau). Jumps multiply by E + mu A exactly; dense parts integrate Phi' = A Phi.
/// For t < tau the inverse of Phi(tau, t) is returned (RegressivityError if singular).
Eigen::MatrixXd transition_matrix(const TimeScaleLinearSystem& sys, double t, double tau,
                                  const SolverOptions& opts = {});

/// Query object over one system; pure and safe to share between threads.
class TransitionMatrix {
public:
  explicit TransitionMatrix(const TimeScaleLinearSystem& sys, SolverOptions opts = {})
      : sys_(&sys), opts_(opts) {}
  Eigen::MatrixXd operator()(double t, double tau) const {
    return transition_matrix(*sys_, t, tau, opts_);
  }

private:
  const TimeScaleLinearSystem* sys_;
  SolverOptions opts_;
};

/// e_p(t, s) = exp(int_s^t xi_mu(p) Delta tau). Jumps with 1 + mu p < 0 contribute a sign.
double generalized_exp(const TimeScaleWindow& ts, const std::function<double(double)>& p, double t,
                       double s, const SolverOptions& opts = {});

/// Forward solution from x0 at t_from to t_to, sampled on the window grid.
Trajectory solve_forced(const TimeScaleLinearSystem& sys, const Eigen::VectorXd& x0, double t_from,
                        double t_to, const SolverOptions& opts = {});

enum class StabilityVerdict { Stable, UniformlyStable, Unstable, Inconclusive };
std::string to_string(StabilityVerdict v);

struct StabilityReport {
  StabilityVerdict verdict = StabilityVerdict::Inconclusive;
  double gamma = 0.0;            // sup over grid pairs t >= t0 of ||Phi(t, t0)||
  double gamma_first_half = 0.0;  // same, pairs inside the first half of the grid
  double sup_from_start = 0.0;   // sup_t ||Phi(t, t_first)||
  double sup_from_start_first_half = 0.0;
  std::size_t grid_points = 0;
};

struct StabilityOptions {
  SolverOptions solver{};
  double bounded_ratio = 1.1;  // second-half/first-half growth at or below this: bounded
  double growth_ratio = 1.5;   // at or above this: growing
  std::size_t max_grid = 400;
};

/// Window verdict from sup norms of Phi over grid pairs and their growth between
/// the first half of the window and the whole window.
StabilityReport classify_stability(const TimeScaleLinearSystem& sys, const StabilityOptions& opts = {});

}  // namespace tsdyn
