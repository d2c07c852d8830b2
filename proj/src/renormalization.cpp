#include "tsdyn/renormalization.hpp"

#include "tsdyn/errors.hpp"

#include <algorithm>
#include <cmath>

namespace tsdyn {

namespace {
constexpr double kRangeSlack = 1e-12;
}

RenormalizationMap build_renormalization(const TimeScaleWindow& ts) {
  RenormalizationMap map;
  const auto& comps = ts.components();
  const std::size_t n = comps.size();

  auto first_nonneg = std::find_if(comps.begin(), comps.end(),
                                   [](const Component& c) { return c.hi >= 0.0; });
  if (first_nonneg == comps.end()) {
    map.anchor_component_ = n - 1;
    map.t0_ = comps.back().hi;
    map.anchor_shifted_ = true;
  } else {
    map.anchor_component_ = static_cast<std::size_t>(first_nonneg - comps.begin());
    map.t0_ = std::max(0.0, first_nonneg->lo);
  }

  map.t_lo_.resize(n);
  map.t_hi_.resize(n);
  map.s_lo_.resize(n);
  map.s_hi_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    map.t_lo_[k] = comps[k].lo;
    map.t_hi_[k] = comps[k].hi;
  }

  const std::size_t a = map.anchor_component_;
  map.s_lo_[a] = comps[a].lo - map.t0_;
  map.s_hi_[a] = comps[a].hi - map.t0_;
  for (std::size_t k = a + 1; k < n; ++k) {
    map.s_lo_[k] = map.s_hi_[k - 1] + std::log1p(comps[k].lo - comps[k - 1].hi);
    map.s_hi_[k] = map.s_lo_[k] + comps[k].length();
  }
  for (std::size_t k = a; k-- > 0;) {
    map.s_hi_[k] = map.s_lo_[k + 1] - std::log1p(comps[k + 1].lo - comps[k].hi);
    map.s_lo_[k] = map.s_hi_[k] - comps[k].length();
  }
  return map;
}

double RenormalizationMap::apply(double t) const {
  if (!(t >= t_min() - kRangeSlack && t <= t_max() + kRangeSlack))
    throw DomainError("time outside the renormalized range");
  t = std::clamp(t, t_min(), t_max());
  auto it = std::upper_bound(t_lo_.begin(), t_lo_.end(), t);
  const auto k = static_cast<std::size_t>(it - t_lo_.begin()) - 1;
  if (t <= t_hi_[k]) return s_lo_[k] + (t - t_lo_[k]);
  if (k >= anchor_component_) return s_hi_[k] + std::log1p(t - t_hi_[k]);
  return s_lo_[k + 1] - std::log1p(t_lo_[k + 1] - t);
}

double RenormalizationMap::invert(double s) const {
  if (!(s >= s_min() - kRangeSlack && s <= s_max() + kRangeSlack))
    throw DomainError("value outside the image of the renormalization");
  s = std::clamp(s, s_min(), s_max());
  auto it = std::upper_bound(s_lo_.begin(), s_lo_.end(), s);
  const auto k = static_cast<std::size_t>(it - s_lo_.begin()) - 1;
  if (s <= s_hi_[k]) return t_lo_[k] + (s - s_lo_[k]);
  if (k >= anchor_component_) return t_hi_[k] + std::expm1(s - s_hi_[k]);
  return t_lo_[k + 1] - std::expm1(s_lo_[k + 1] - s);
}

std::vector<RenormalizationMap::Breakpoint> RenormalizationMap::breakpoints() const {
  std::vector<Breakpoint> out;
  for (std::size_t k = 0; k < t_lo_.size(); ++k) {
    out.push_back({t_lo_[k], s_lo_[k]});
    if (t_hi_[k] > t_lo_[k]) out.push_back({t_hi_[k], s_hi_[k]});
  }
  return out;
}

TimeScaleWindow renormalized_scale(const RenormalizationMap& map, const TimeScaleWindow& ts) {
  std::vector<Component> comps;
  comps.reserve(ts.size());
  for (const auto& c : ts.components()) {
    if (c.is_point()) {
      const double s = map.apply(c.lo);
      comps.push_back({s, s});
    } else {
      const double s = map.apply(c.lo);
      comps.push_back({s, s + c.length()});
    }
  }
  double lo = comps.front().lo - std::log1p(ts.min_point() - ts.window_lo());
  double hi = comps.back().hi + std::log1p(ts.window_hi() - ts.max_point());
  if (!(lo < hi)) hi = lo + 1.0;
  TimeScaleWindow out(lo, hi, std::move(comps));
  out.set_syndetic_hint(ts.syndetic_hint());
  return out;
}

}  // namespace tsdyn
