#include "tsdyn/embedding.hpp"

#include "tsdyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <type_traits>

namespace tsdyn {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cd = std::complex<double>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
Mat<Scalar> coef_B(const EmbeddedSystem& e, const EmbeddedPiece& p, double s) {
  if (p.is_gap) {
    if constexpr (std::is_same_v<Scalar, double>) return e.gaps()[p.gap].B.real();
    else return e.gaps()[p.gap].B;
  }
  return e.system().A(p.t_lo + (s - p.s_lo)).template cast<Scalar>();
}

template <typename Scalar>
Vec<Scalar> coef_g(const EmbeddedSystem& e, const EmbeddedPiece& p, double s) {
  if (p.is_gap) {
    if constexpr (std::is_same_v<Scalar, double>) return e.gaps()[p.gap].g.real();
    else return e.gaps()[p.gap].g;
  }
  return e.system().f(p.t_lo + (s - p.s_lo)).template cast<Scalar>();
}

// Integrates through every piece between s0 and s1; State is a matrix (transition)
// or a vector (forced solution).
template <typename Scalar, typename State>
State run_pieces(const EmbeddedSystem& e, double s0, double s1, State y, bool forced,
                 const OdeOptions& opts) {
  if (s0 < e.s_min() - 1e-12 || s0 > e.s_max() + 1e-12 || s1 < e.s_min() - 1e-12 ||
      s1 > e.s_max() + 1e-12)
    throw DomainError("time outside the renormalized window");
  const auto pts = split_at(s0, s1, e.breaks());
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double u = pts[k], v = pts[k + 1];
    if (u == v) continue;
    const auto& piece = e.pieces()[e.piece_of(0.5 * (u + v))];
    if (piece.is_gap) {
      const Mat<Scalar> B = coef_B<Scalar>(e, piece, u);
      const Vec<Scalar> g = coef_g<Scalar>(e, piece, u);
      auto rhs = [&](double, const State& x) -> State {
        if constexpr (State::ColsAtCompileTime == 1) {
          State r = B * x;
          if (forced) r += g;
          return r;
        } else {
          return B * x;
        }
      };
      y = integrate(rhs, u, v, std::move(y), opts);
    } else {
      auto rhs = [&](double s, const State& x) -> State {
        const double ss = nudge(s, u, v);
        if constexpr (State::ColsAtCompileTime == 1) {
          State r = coef_B<Scalar>(e, piece, ss) * x;
          if (forced) r += coef_g<Scalar>(e, piece, ss);
          return r;
        } else {
          return coef_B<Scalar>(e, piece, ss) * x;
        }
      };
      y = integrate(rhs, u, v, std::move(y), opts);
    }
  }
  return y;
}

}  // namespace

EmbeddedSystem::EmbeddedSystem(TimeScaleLinearSystem sys, RenormalizationMap map, LogMode mode)
    : sys_(std::move(sys)), map_(std::move(map)), mode_(mode) {
  const auto& comps = sys_.scale().components();
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const auto& c = comps[k];
    if (!c.is_point()) {
      const double s_lo = map_.apply(c.lo);
      std::vector<double> cuts{c.lo};
      for (double b : sys_.breaks())
        if (b > c.lo && b < c.hi) cuts.push_back(b);
      cuts.push_back(c.hi);
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        EmbeddedPiece p;
        p.s_lo = s_lo + (cuts[i] - c.lo);
        p.s_hi = s_lo + (cuts[i + 1] - c.lo);
        p.t_lo = cuts[i];
        pieces_.push_back(p);
      }
    }
    if (k + 1 == comps.size()) break;

    EmbeddedGap gap;
    gap.t1 = c.hi;
    gap.mu = comps[k + 1].lo - c.hi;
    gap.s_lo = map_.gap_image_lo(k);
    gap.s_hi = map_.gap_image_hi(k);
    const MatrixXd A1 = sys_.A(gap.t1);
    const VectorXd f1 = sys_.f(gap.t1);
    const double L = std::log1p(gap.mu);
    bool done = false;
    try {
      gap.B = log_ratio(gap.mu, A1).cast<cd>();
      gap.g = (phi_fun(gap.mu, A1) * f1 / L).cast<cd>();
      done = true;
    } catch (const BranchError&) {
      if (mode_ == LogMode::Real) throw;
    }
    if (!done) {
      gap.B = log_ratio_complex(gap.mu, A1);
      gap.g = phi_fun_complex(gap.mu, A1) * f1.cast<cd>() / cd(L);
      real_valued_ = false;
    }

    EmbeddedPiece p;
    p.s_lo = gap.s_lo;
    p.s_hi = gap.s_hi;
    p.is_gap = true;
    p.gap = gaps_.size();
    p.t_lo = gap.t1;
    pieces_.push_back(p);
    gaps_.push_back(std::move(gap));
  }
}

std::size_t EmbeddedSystem::piece_of(double s) const {
  if (pieces_.empty()) throw DomainError("embedded system over a single scale point has no pieces");
  const double tol = 1e-12 * std::max(1.0, std::abs(s));
  if (s < s_min() - tol || s > s_max() + tol) throw DomainError("time outside the renormalized window");
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), s,
                             [](double v, const EmbeddedPiece& p) { return v < p.s_lo; });
  if (it == pieces_.begin()) return 0;
  return static_cast<std::size_t>(std::prev(it) - pieces_.begin());
}

Eigen::MatrixXcd EmbeddedSystem::B(double s) const {
  return coef_B<cd>(*this, pieces_[piece_of(s)], s);
}

Eigen::VectorXcd EmbeddedSystem::g(double s) const {
  return coef_g<cd>(*this, pieces_[piece_of(s)], s);
}

Eigen::MatrixXd EmbeddedSystem::B_real(double s) const {
  if (!real_valued_) throw DomainError("embedding is complex-valued");
  return coef_B<double>(*this, pieces_[piece_of(s)], s);
}

Eigen::VectorXd EmbeddedSystem::g_real(double s) const {
  if (!real_valued_) throw DomainError("embedding is complex-valued");
  return coef_g<double>(*this, pieces_[piece_of(s)], s);
}

std::vector<double> EmbeddedSystem::breaks() const {
  std::vector<double> out;
  for (const auto& p : pieces_) {
    if (out.empty()) out.push_back(p.s_lo);
    out.push_back(p.s_hi);
  }
  return out;
}

std::vector<double> EmbeddedSystem::sample_grid(double h) const {
  if (!(h > 0.0)) throw DomainError("sampling spacing must be positive");
  std::vector<double> out;
  for (double t : sys_.scale().sampling_grid(h)) out.push_back(map_.apply(t));
  for (const auto& gp : gaps_) {
    const double L = gp.s_hi - gp.s_lo;
    const auto n = static_cast<long>(std::ceil(L / h - 1e-9));
    for (long k = 1; k < n; ++k) out.push_back(gp.s_lo + L * static_cast<double>(k) / n);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Eigen::MatrixXcd EmbeddedSystem::transition(double s1, double s0, const OdeOptions& opts) const {
  if (real_valued_) return transition_real(s1, s0, opts).cast<cd>();
  const MatrixXcd I = MatrixXcd::Identity(dim(), dim());
  if (s0 == s1) return I;
  return run_pieces<cd>(*this, s0, s1, I, false, opts);
}

Eigen::MatrixXd EmbeddedSystem::transition_real(double s1, double s0, const OdeOptions& opts) const {
  if (!real_valued_) throw DomainError("embedding is complex-valued");
  const MatrixXd I = MatrixXd::Identity(dim(), dim());
  if (s0 == s1) return I;
  return run_pieces<double>(*this, s0, s1, I, false, opts);
}

Eigen::VectorXcd EmbeddedSystem::propagate(const Eigen::VectorXcd& x0, double s0, double s1,
                                           const OdeOptions& opts) const {
  if (x0.size() != dim()) throw DomainError("initial state has the wrong dimension");
  if (real_valued_ && x0.imag().isZero(0.0))
    return propagate_real(x0.real(), s0, s1, opts).cast<cd>();
  if (s0 == s1) return x0;
  return run_pieces<cd>(*this, s0, s1, VectorXcd(x0), sys_.forced(), opts);
}

Eigen::VectorXd EmbeddedSystem::propagate_real(const Eigen::VectorXd& x0, double s0, double s1,
                                               const OdeOptions& opts) const {
  if (!real_valued_) throw DomainError("embedding is complex-valued");
  if (x0.size() != dim()) throw DomainError("initial state has the wrong dimension");
  if (s0 == s1) return x0;
  return run_pieces<double>(*this, s0, s1, VectorXd(x0), sys_.forced(), opts);
}

Trajectory EmbeddedSystem::solve_on_grid(const Eigen::VectorXd& x0, const std::vector<double>& grid,
                                         const OdeOptions& opts) const {
  if (grid.empty()) throw DomainError("empty grid");
  Trajectory out;
  VectorXd x = x0;
  out.times.push_back(grid.front());
  out.values.push_back(x);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw DomainError("grid must be strictly increasing");
    x = propagate_real(x, grid[k - 1], grid[k], opts);
    out.times.push_back(grid[k]);
    out.values.push_back(x);
  }
  return out;
}

EmbeddedSystem EmbeddedSystem::with_forcing(VectorFunction f) const {
  return EmbeddedSystem(sys_.with_forcing(std::move(f)), map_, mode_);
}

EmbeddedSystem embed(const TimeScaleLinearSystem& sys, const RenormalizationMap& map, LogMode mode) {
  return EmbeddedSystem(sys, map, mode);
}

EmbeddedSystem embed(const TimeScaleLinearSystem& sys, LogMode mode) {
  return EmbeddedSystem(sys, build_renormalization(sys.scale()), mode);
}

ConditionIReport check_condition_one(const EmbeddedSystem& emb, double h_grid) {
  const auto& sys = emb.system();
  const auto& ts = sys.scale();
  ConditionIReport rep;
  const auto reg = check_regressive(sys);
  rep.regressive = reg.regressive;
  rep.uniformly_regressive = reg.uniformly_regressive;
  rep.sup_inverse_norm = reg.inverse_norm_sup;
  rep.syndetic = ts.syndetic_hint();
  rep.max_graininess = ts.max_graininess();

  const double h = h_grid > 0.0 ? h_grid : ts.default_h();
  for (double t : ts.sampling_grid(h)) {
    const MatrixXd A = sys.A(t);
    Eigen::JacobiSVD<MatrixXd> svd(A);
    const auto& sv = svd.singularValues();
    rep.sup_A_norm = std::max(rep.sup_A_norm, sv(0));
    const double smin = sv(sv.size() - 1);
    if (!(smin > 1e-12 * std::max(1.0, sv(0)))) {
      rep.A_invertible = false;
      rep.sup_A_inverse_norm = std::numeric_limits<double>::infinity();
    } else if (rep.A_invertible) {
      rep.sup_A_inverse_norm = std::max(rep.sup_A_inverse_norm, 1.0 / smin);
    }
    rep.sup_B_norm = std::max(rep.sup_B_norm, sv(0));
    rep.sup_g_norm = std::max(rep.sup_g_norm, sys.f(t).norm());
  }
  for (const auto& gp : emb.gaps()) {
    rep.sup_B_norm = std::max(rep.sup_B_norm, gp.B.operatorNorm());
    rep.sup_g_norm = std::max(rep.sup_g_norm, gp.g.norm());
  }

  const bool item1 = rep.regressive && rep.uniformly_regressive;
  const bool item2 = rep.syndetic || (rep.A_invertible && rep.sup_A_inverse_norm < 1e8);
  rep.holds = item1 && item2;
  if (!item1) rep.note = "E + mu A is singular or its inverse is unbounded on the window";
  else if (!item2) rep.note = "non-syndetic scale with A(t) singular or nearly singular";
  else if (!rep.syndetic) rep.note = "non-syndetic scale: only uniformly unstable profiles are feasible";
  return rep;
}

EmbeddingReport verify_embedding(const TimeScaleLinearSystem& sys, const EmbeddedSystem& emb,
                                 const VerifyOptions& opts) {
  EmbeddingReport rep;
  const auto& ts = sys.scale();
  const auto& map = emb.map();
  const int n = sys.dim();
  const MatrixXd I = MatrixXd::Identity(n, n);
  std::mt19937_64 rng(opts.seed);

  for (const auto& gp : emb.gaps()) {
    const double L = gp.s_hi - gp.s_lo;
    const MatrixXd M = I + gp.mu * sys.A(gp.t1);
    auto rhs = [&gp](double, const MatrixXcd& X) -> MatrixXcd { return gp.B * X; };
    const MatrixXcd E = integrate(rhs, 0.0, L, MatrixXcd(MatrixXcd::Identity(n, n)), opts.ode);
    rep.max_gap_exp_residual =
        std::max(rep.max_gap_exp_residual, (E - M.cast<cd>()).norm() / M.norm());
    std::normal_distribution<double> g;
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = g(rng);
    auto frhs = [&gp](double, const VectorXcd& x) -> VectorXcd { return gp.B * x + gp.g; };
    const VectorXcd end = integrate(frhs, 0.0, L, VectorXcd(v.cast<cd>()), opts.ode);
    const VectorXd ref = M * v + gp.mu * sys.f(gp.t1);
    rep.max_gap_forcing_residual = std::max(
        rep.max_gap_forcing_residual, (end - ref.cast<cd>()).norm() / std::max(1.0, ref.norm()));
  }

  const auto grid = ts.sampling_grid(ts.default_h());
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
  const TimeScaleLinearSystem hom = sys.homogeneous();
  const SolverOptions sopts{opts.ode.rtol};
  for (std::size_t k = 0; k < opts.n_pairs; ++k) {
    std::size_t i = pick(rng), j = pick(rng);
    if (i > j) std::swap(i, j);
    const double tau = grid[i], t = grid[j];
    const MatrixXd PA = transition_matrix(hom, t, tau, sopts);
    const MatrixXcd PB = emb.transition(map.apply(t), map.apply(tau), opts.ode);
    const double dev = (PB - PA.cast<cd>()).norm() / std::max(PA.norm(), 1e-300);
    ++rep.pairs;
    if (!rep.worst_t || dev > rep.max_deviation) {
      rep.max_deviation = std::max(rep.max_deviation, dev);
      rep.worst_t = t;
      rep.worst_tau = tau;
    }
  }

  if (opts.check_solution) {
    std::normal_distribution<double> g;
    VectorXd c0(n), c1(n), x0(n);
    for (int i = 0; i < n; ++i) {
      c0(i) = g(rng);
      c1(i) = g(rng);
      x0(i) = g(rng);
    }
    const TimeScaleLinearSystem forced =
        sys.forced() ? sys
                     : sys.with_forcing([c0, c1](double t) -> VectorXd { return c0 + std::sin(t) * c1; });
    const EmbeddedSystem femb = sys.forced() ? emb : emb.with_forcing([c0, c1](double t) -> VectorXd {
      return c0 + std::sin(t) * c1;
    });
    const double t_first = ts.components().front().lo, t_last = ts.components().back().hi;
    const auto phi = solve_forced(forced, x0, t_first, t_last, sopts);
    VectorXcd psi = x0.cast<cd>();
    double prev_s = map.apply(phi.times.front());
    for (std::size_t k = 0; k < phi.size(); ++k) {
      const double s = map.apply(phi.times[k]);
      psi = femb.propagate(psi, prev_s, s, opts.ode);
      prev_s = s;
      const double dev =
          (psi - phi.values[k].cast<cd>()).norm() / std::max(1.0, phi.values[k].norm());
      rep.solution_deviation = std::max(rep.solution_deviation, dev);
    }
  }
  return rep;
}

Trajectory pull_back(const EmbeddedSystem& emb, const Trajectory& psi) {
  const auto& ts = emb.system().scale();
  const auto& map = emb.map();
  Trajectory out;
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const double s = psi.times[k];
    if (s < map.s_min() - 1e-12 || s > map.s_max() + 1e-12)
      throw DomainError("ODE sample outside the renormalized window");
    const double t = map.invert(std::clamp(s, map.s_min(), map.s_max()));
    if (!ts.contains(t)) continue;
    out.times.push_back(ts.snap(t));
    out.values.push_back(psi.values[k]);
  }
  return out;
}

}  // namespace tsdyn
