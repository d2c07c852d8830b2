#pragma once

#include "tsdyn/linear_timescale.hpp"
#include "tsdyn/matrix_functions.hpp"
#include "tsdyn/ode.hpp"
#include "tsdyn/renormalization.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tsdyn {

/// Constant coefficients on the image (s_lo, s_hi) of the gap after scale point t1.
struct EmbeddedGap {
  double s_lo = 0.0, s_hi = 0.0;
  double t1 = 0.0, mu = 0.0;
  Eigen::MatrixXcd B;
  Eigen::VectorXcd g;
};

/// One piece of the renormalized window: either the image of (part of) an interval
/// component, where B(s) = A(t_lo + s - s_lo), or an image gap.
struct EmbeddedPiece {
  double s_lo = 0.0, s_hi = 0.0;
  bool is_gap = false;
  std::size_t gap = 0;  // index into gaps() when is_gap
  double t_lo = 0.0;    // scale time at s_lo for dense pieces
};

/// x' = B(s) x + g(s) on the renormalized window.
class EmbeddedSystem {
public:
  EmbeddedSystem(TimeScaleLinearSystem sys, RenormalizationMap map, LogMode mode);

  int dim() const { return sys_.dim(); }
  LogMode mode() const { return mode_; }
  /// True when every gap matrix has a real logarithm, so B and g are real.
  bool real_valued() const { return real_valued_; }
  const TimeScaleLinearSystem& system() const { return sys_; }
  const RenormalizationMap& map() const { return map_; }
  const std::vector<EmbeddedGap>& gaps() const { return gaps_; }
  const std::vector<EmbeddedPiece>& pieces() const { return pieces_; }
  double s_min() const { return pieces_.empty() ? map_.s_min() : pieces_.front().s_lo; }
  double s_max() const { return pieces_.empty() ? map_.s_max() : pieces_.back().s_hi; }

  /// Piece containing s, right-continuous; the last piece also owns s_max.
  std::size_t piece_of(double s) const;
  Eigen::MatrixXcd B(double s) const;
  Eigen::VectorXcd g(double s) const;
  /// Real parts; DomainError when the embedding is not real-valued.
  Eigen::MatrixXd B_real(double s) const;
  Eigen::VectorXd g_real(double s) const;

  /// Piece boundaries, ascending, including both window ends.
  std::vector<double> breaks() const;
  /// Image of the scale sampling grid plus interior points of every gap at spacing <= h.
  std::vector<double> sample_grid(double h) const;

  /// Phi_B(s1, s0) by adaptive integration through every piece (also across gaps).
  Eigen::MatrixXcd transition(double s1, double s0, const OdeOptions& opts = {}) const;
  Eigen::MatrixXd transition_real(double s1, double s0, const OdeOptions& opts = {}) const;

  /// Solution of the forced equation from x0 at s0 to s1 (either direction).
  Eigen::VectorXcd propagate(const Eigen::VectorXcd& x0, double s0, double s1,
                             const OdeOptions& opts = {}) const;
  Eigen::VectorXd propagate_real(const Eigen::VectorXd& x0, double s0, double s1,
                                 const OdeOptions& opts = {}) const;

  /// Forced real solution sampled at each point of an ascending grid, started from x0 at grid[0].
  Trajectory solve_on_grid(const Eigen::VectorXd& x0, const std::vector<double>& grid,
                           const OdeOptions& opts = {}) const;

  EmbeddedSystem with_forcing(VectorFunction f) const;

private:
  TimeScaleLinearSystem sys_;
  RenormalizationMap map_;
  LogMode mode_;
  bool real_valued_ = true;
  std::vector<EmbeddedGap> gaps_;
  std::vector<EmbeddedPiece> pieces_;
};

EmbeddedSystem embed(const TimeScaleLinearSystem& sys, const RenormalizationMap& map,
                     LogMode mode = LogMode::Real);
EmbeddedSystem embed(const TimeScaleLinearSystem& sys, LogMode mode = LogMode::Real);

struct ConditionIReport {
  bool regressive = true;
  bool uniformly_regressive = true;
  double sup_A_norm = 0.0;
  double sup_inverse_norm = 1.0;  // sup ||(E + mu A)^{-1}|| over jumps
  bool syndetic = true;
  double max_graininess = 0.0;
  bool A_invertible = true;
  double sup_A_inverse_norm = 0.0;  // infinite when some sampled A(t) is singular
  double sup_B_norm = 0.0;
  double sup_g_norm = 0.0;
  bool holds = true;
  std::string note;
};

/// Condition I evaluated on the scale sampling grid: boundedness of A and of
/// (E + mu A)^{-1}, and syndeticity or uniform invertibility of A.
ConditionIReport check_condition_one(const EmbeddedSystem& emb, double h_grid = 0.0);

struct EmbeddingReport {
  std::size_t pairs = 0;
  double max_deviation = 0.0;           // relative, transition matrices
  std::optional<double> worst_t, worst_tau;
  double solution_deviation = 0.0;      // relative, forced solutions on the scale grid
  double max_gap_exp_residual = 0.0;    // ||exp(B L) - (E + mu A)|| / ||E + mu A||
  double max_gap_forcing_residual = 0.0;
};

struct VerifyOptions {
  std::size_t n_pairs = 50;
  std::uint64_t seed = 1;
  OdeOptions ode{1e-11, 1e-13, 2'000'000};
  bool check_solution = true;
};

/// Compares Phi_A(t, tau) with Phi_B(s(t), s(tau)) on random scale pairs t >= tau and a
/// forced solution with its embedded counterpart.
EmbeddingReport verify_embedding(const TimeScaleLinearSystem& sys, const EmbeddedSystem& emb,
                                 const VerifyOptions& opts = {});

/// Restriction of an ODE-side trajectory to the scale: keeps samples whose time s is the
/// image of a scale point and relabels them by t = s^{-1}(s).
Trajectory pull_back(const EmbeddedSystem& emb, const Trajectory& psi);

}  // namespace tsdyn
