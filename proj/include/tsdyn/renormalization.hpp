#pragma once

#include "tsdyn/timescale.hpp"

#include <cstddef>
#include <vector>

namespace tsdyn {

/// Monotone change of time s: R -> R that keeps the Lebesgue measure of the
/// dense part of a scale and shrinks every gap of length mu to ln(1 + mu).
///
/// The anchor t0 is the first scale point >= 0 and satisfies s(t0) = 0. When the
/// window has no point >= 0 the anchor falls back to the maximal point and
/// anchor_shifted() reports it. Queries are restricted to
/// [min_point, max_point] of the source window.
class RenormalizationMap {
public:
  struct Breakpoint {
    double t;
    double s;
  };

  double t0() const { return t0_; }
  bool anchor_shifted() const { return anchor_shifted_; }
  std::size_t jump_count() const { return t_lo_.empty() ? 0 : t_lo_.size() - 1; }

  double t_min() const { return t_lo_.front(); }
  double t_max() const { return t_hi_.back(); }
  double s_min() const { return s_lo_.front(); }
  double s_max() const { return s_hi_.back(); }

  double apply(double t) const;
  double invert(double s) const;

  /// (t, s(t)) at every component endpoint, ordered.
  std::vector<Breakpoint> breakpoints() const;

  /// Image interval (s(t1), s(t2)) of gap k, between components k and k+1.
  double gap_image_lo(std::size_t k) const { return s_hi_[k]; }
  double gap_image_hi(std::size_t k) const { return s_lo_[k + 1]; }

  friend RenormalizationMap build_renormalization(const TimeScaleWindow& ts);

private:
  RenormalizationMap() = default;

  // Component k is [t_lo_[k], t_hi_[k]] with image [s_lo_[k], s_hi_[k]].
  std::vector<double> t_lo_, t_hi_, s_lo_, s_hi_;
  std::size_t anchor_component_ = 0;
  double t0_ = 0.0;
  bool anchor_shifted_ = false;
};

RenormalizationMap build_renormalization(const TimeScaleWindow& ts);

inline double apply(const RenormalizationMap& map, double t) { return map.apply(t); }
inline double invert(const RenormalizationMap& map, double s) { return map.invert(s); }

/// The renormalized scale s(T). Window edges beyond the extreme points are
/// treated as gaps and mapped with the same logarithmic law.
TimeScaleWindow renormalized_scale(const RenormalizationMap& map, const TimeScaleWindow& ts);

}  // namespace tsdyn
