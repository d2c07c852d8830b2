#pragma once

#include "tsdyn/dichotomy.hpp"
#include "tsdyn/embedding.hpp"
#include "tsdyn/linear_timescale.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tsdyn {

struct BoundedOptions {
  OdeOptions ode{1e-11, 1e-13, 2'000'000};
  bool operator_bound = true;  // compute the forcing-independent bound (collocation only)
  double certify_h = 0.02;     // finite-difference spacing for the dense residual
  double jump_tol = 1e-6;
  double dense_tol = 1e-5;
};

struct BoundedSolutionResult {
  std::string method;  // "single" or "collocation"
  Trajectory psi;      // ODE side, at the sample times in s
  Trajectory phi;      // scale side, filled by pull_back_and_certify

  double K = 0.0;               // sup ||phi|| (sup ||psi|| before pull-back)
  double forcing_sup = 0.0;     // sup ||g|| over the samples
  double greens_bound = 0.0;    // single: a (sup||P^s|| + sup||P^u||) / lambda * sup||g||
  double truncation_bound = 0.0;  // single: a e^{-lambda L/2} sup||g|| / lambda at the window centre
  std::optional<double> operator_bound;  // sup ||psi|| over all forcings with sup ||f|| <= 1
  double ode_residual = 0.0;    // max ||x_{k+1} - Phi_k x_k - c_k|| / (1 + ||x||)
  double max_jump_residual = 0.0;
  double max_dense_residual = 0.0;
  std::optional<double> worst_jump_time, worst_dense_time;
  bool certified = false;
  std::vector<std::string> warnings;
};

/// Green's-function solution on one dichotomy segment: the stable part is carried forward
/// with the stable projection, the unstable part backward with the unstable projection.
/// `emb` carries the forcing; `seg` comes from the same coefficients.
BoundedSolutionResult solve_bounded_single(const EmbeddedSystem& emb, const DichotomySegment& seg,
                                           const BoundedOptions& opts = {});

/// Discrete boundary-value problem over the whole profile: x_{k+1} = Phi_k x_k + c_k on the
/// concatenated sample grid, P^s(s_min) x = 0 and P^u(s_max) x = 0. Extra freedom from
/// increasing stable dimensions is removed by taking the minimum-norm solution.
BoundedSolutionResult solve_bounded_profile(const EmbeddedSystem& emb, const DichotomyProfile& profile,
                                            const BoundedOptions& opts = {});

/// phi(t) = psi(s(t)) and independent residual checks against the scale system.
/// CertificationError names the worst location when a residual exceeds its tolerance.
BoundedSolutionResult pull_back_and_certify(BoundedSolutionResult result, const EmbeddedSystem& emb,
                                            const TimeScaleLinearSystem& sys,
                                            const BoundedOptions& opts = {});

struct LinearityReport {
  double defect = 0.0;     // sup ||L(c f1 + f2) - c L f1 - L f2||
  double scale = 0.0;      // 1 + sup ||c f1 + f2||
  bool holds = false;      // defect <= 1e-8 * scale
};

LinearityReport operator_linearity_check(const EmbeddedSystem& emb, const DichotomyProfile& profile,
                                         const VectorFunction& f1, const VectorFunction& f2, double c,
                                         const BoundedOptions& opts = {});

}  // namespace tsdyn
