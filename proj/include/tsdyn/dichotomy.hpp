#pragma once

#include "tsdyn/embedding.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tsdyn {

struct DichotomyOptions {
  double gap_tol = 10.0;   // growth-rate ratio separating the two groups
  double a_cap = 1e3;      // largest admissible prefactor
  double h_grid = 0.0;     // sample spacing in s; <= 0: segment length / 200
  std::size_t max_certify_points = 300;
  double zero_real_tol = 1e-9;  // constant B: |Re eig| below this (relative) is not hyperbolic
  OdeOptions ode{1e-11, 1e-13, 2'000'000};
};

/// Exponential dichotomy on [s_lo, s_hi] of the embedded system, with bases and
/// projections at every sample time.
struct DichotomySegment {
  double s_lo = 0.0, s_hi = 0.0;
  int dim_s = 0, dim_u = 0;
  double a = 1.0, lambda = 0.0;
  bool constant_B = false;
  double gap_ratio = 0.0;          // growth-rate separation (infinite for constant B)
  double invariance_error = 0.0;   // max sin of the angle between Phi E(tau) and E(t), adjacent samples
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> Es, Eu;  // orthonormal columns
  std::vector<Eigen::MatrixXd> Ps;      // stable projection along E^u
  std::vector<Eigen::MatrixXd> steps;   // Phi(times[k+1], times[k])

  int dim() const { return dim_s + dim_u; }
  std::size_t index_of(double s) const;  // DomainError if s is not a sample time
  Eigen::MatrixXd stable_projection(double s) const { return Ps[index_of(s)]; }
  Eigen::MatrixXd unstable_projection(double s) const;
};

struct DichotomyResult {
  bool hyperbolic = false;
  std::optional<DichotomySegment> segment;
  std::string reason;  // why not hyperbolic
  std::vector<double> log_stretch;  // log growth of Phi(s_hi, s_lo) per direction, descending
};

/// Splits the dynamics on [s_lo, s_hi] into decaying and growing directions and fits
/// (a, lambda): lambda from the spectrum or the QR-method growth rates (capped by lambda_hint),
/// then the smallest a making the decay inequalities hold at every certified sample pair.
/// Requires a real-valued embedding.
DichotomyResult estimate_dichotomy(const EmbeddedSystem& emb, double s_lo, double s_hi,
                                   std::optional<double> lambda_hint = std::nullopt,
                                   const DichotomyOptions& opts = {});

/// All principal angles between span(U) and span(V), ascending.
std::vector<double> principal_angles(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V);

/// Transversality angle: 0 when U + V is not the whole space; otherwise the smallest
/// principal angle left after discarding the zero angles of U intersect V, or pi/2 when
/// one space contains the other.
double subspace_angle(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V);

struct DichotomyProfile {
  std::vector<double> breaks;  // tau_0 = s_min < tau_1 < ... < tau_k = s_max
  std::vector<DichotomyResult> results;
  std::vector<int> dims_s;
  std::vector<double> angles;  // alpha_j at interior breaks
  double alpha = 0.0;          // min angle; pi/2 with a single segment
  double a = 1.0, lambda = 0.0;  // worst over segments
  double min_segment_length = 0.0;
  bool condition_II = false, condition_III = false, condition_IV = false;
  std::vector<std::string> diagnostics;

  bool holds() const { return condition_II && condition_III && condition_IV; }
  const DichotomySegment& segment(std::size_t j) const;
};

/// Per-segment estimation between the window ends and the interior break times (in s).
DichotomyProfile build_profile(const EmbeddedSystem& emb, const std::vector<double>& break_times,
                               std::optional<double> lambda_hint = std::nullopt,
                               const DichotomyOptions& opts = {});

/// Smallest T with 36 a^2 e^{-lambda T/3} < (alpha/8) sin(alpha/4) and
/// 3 a (2/sin(alpha/2) + 1) e^{-lambda T/3} < 1.
double threshold_T(double a, double lambda, double alpha);

struct ParameterFamily {
  std::vector<Eigen::VectorXd> samples;
  std::function<TimeScaleLinearSystem(const Eigen::VectorXd&)> make;
};

struct FamilyMemberReport {
  Eigen::VectorXd nu;
  bool ok = false;
  std::string error;
  std::optional<DichotomyProfile> profile;
};

struct FamilyReport {
  std::vector<FamilyMemberReport> members;
  bool all_hold = false;
  double a = 1.0, lambda = 0.0, alpha = 0.0;  // worst case over members that hold
  double threshold = 0.0;                     // threshold_T(a, lambda, alpha)
  double min_segment_length = 0.0;
  bool segments_exceed_threshold = false;
  std::vector<std::string> notes;
};

/// Embeds and profiles every sampled member; break times are scale times per member.
FamilyReport check_family(const ParameterFamily& fam,
                          const std::function<std::vector<double>(const Eigen::VectorXd&)>& break_times,
                          std::size_t n_samples = 0, std::optional<double> lambda_hint = std::nullopt,
                          const DichotomyOptions& opts = {}, LogMode mode = LogMode::Real);

}  // namespace tsdyn
