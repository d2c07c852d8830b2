#pragma once

// Adaptive Dormand-Prince 5(4) integration for Eigen-valued states. The state
// can be a vector or a matrix (transition matrices), real or complex.

#include "tsdyn/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace tsdyn {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  long max_steps = 2'000'000;
};

namespace detail {

template <typename State>
double scaled_error(const State& err, const State& y0, const State& y1, const OdeOptions& o) {
  const auto scale = (o.atol + o.rtol * y0.array().abs().max(y1.array().abs())).eval();
  return (err.array().abs() / scale).maxCoeff();
}

}  // namespace detail

/// Integrates y' = rhs(t, y) from t0 to t1 (either direction) and returns y(t1).
template <typename State, typename Rhs>
State integrate(const Rhs& rhs, double t0, double t1, State y, const OdeOptions& opts = {}) {
  if (t0 == t1) return y;
  // Dormand-Prince tableau.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double span = t1 - t0;
  const double dir = span > 0 ? 1.0 : -1.0;
  double t = t0;
  double h = dir * std::min(std::abs(span), 0.05);
  State k1 = rhs(t, y);

  for (long step = 0; step < opts.max_steps; ++step) {
    const double remaining = t1 - t;
    bool last = false;
    if (std::abs(h) >= std::abs(remaining)) {
      h = remaining;
      last = true;
    }
    const State k2 = rhs(t + c2 * h, (y + h * (a21 * k1)).eval());
    const State k3 = rhs(t + c3 * h, (y + h * (a31 * k1 + a32 * k2)).eval());
    const State k4 = rhs(t + c4 * h, (y + h * (a41 * k1 + a42 * k2 + a43 * k3)).eval());
    const State k5 = rhs(t + c5 * h, (y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)).eval());
    const State k6 =
        rhs(t + h, (y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)).eval());
    const State y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double t_new = last ? t1 : t + h;
    const State k7 = rhs(t_new, y_new);
    const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = detail::scaled_error(err, y, y_new, opts);

    if (en <= 1.0) {
      t = t_new;
      y = y_new;
      k1 = k7;
      if (last) return y;
      const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      h *= factor;
    } else {
      const double factor = std::isfinite(en) ? std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9) : 0.1;
      h *= factor;
      if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t)))
        throw CertificationError("ODE step size underflow");
    }
  }
  throw CertificationError("ODE integration exceeded the step budget");
}

/// Endpoints of [a, b] split at the breaks lying strictly inside (a, b), in the
/// direction of travel.
inline std::vector<double> split_at(double a, double b, const std::vector<double>& breaks) {
  const double lo = std::min(a, b), hi = std::max(a, b);
  std::vector<double> pts{lo};
  for (double x : breaks)
    if (x > lo && x < hi) pts.push_back(x);
  pts.push_back(hi);
  std::sort(pts.begin(), pts.end());
  if (a > b) std::reverse(pts.begin(), pts.end());
  return pts;
}

/// Clamps t into the open piece (lo, hi) so piecewise coefficients are read on the right side.
inline double nudge(double t, double lo, double hi) {
  if (lo > hi) std::swap(lo, hi);
  const double d = 1e-12 * (hi - lo);
  return std::clamp(t, lo + d, hi - d);
}

}  // namespace tsdyn
