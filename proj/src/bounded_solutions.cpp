#include "tsdyn/bounded_solutions.hpp"

#include "tsdyn/errors.hpp"
#include "tsdyn/matrix_functions.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsdyn {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double sup_forcing(const EmbeddedSystem& emb, const std::vector<double>& times) {
  double m = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    m = std::max(m, emb.g_real(times[k]).norm());
    if (k + 1 < times.size()) m = std::max(m, emb.g_real(0.5 * (times[k] + times[k + 1])).norm());
  }
  return m;
}

std::vector<VectorXd> particular(const EmbeddedSystem& emb, const std::vector<double>& times,
                                 const OdeOptions& ode) {
  const int n = emb.dim();
  std::vector<VectorXd> c(times.size() - 1, VectorXd::Zero(n));
  if (!emb.system().forced()) return c;
  for (std::size_t k = 0; k + 1 < times.size(); ++k)
    c[k] = emb.propagate_real(VectorXd::Zero(n), times[k], times[k + 1], ode);
  return c;
}

// Inverse of [Es Eu]; its top dim_s rows give the stable coordinates.
MatrixXd coordinates(const MatrixXd& Es, const MatrixXd& Eu) {
  MatrixXd basis(Es.rows(), Es.cols() + Eu.cols());
  basis << Es, Eu;
  return basis.fullPivLu().inverse();
}

// Bound on ||c_k|| / sup||f||: the step length times e^{beta h} times the forcing gain.
double step_gain(const EmbeddedSystem& emb, double u, double v) {
  double beta = 0.0, gain = 1.0;
  const auto& pieces = emb.pieces();
  for (std::size_t p = emb.piece_of(u); p < pieces.size() && pieces[p].s_lo < v; ++p) {
    const auto& pc = pieces[p];
    const double lo = std::max(u, pc.s_lo), hi = std::min(v, pc.s_hi);
    if (!(hi > lo)) continue;
    if (pc.is_gap) {
      const auto& gp = emb.gaps()[pc.gap];
      beta = std::max(beta, gp.B.operatorNorm());
      const auto phi = phi_fun_complex(gp.mu, emb.system().A(gp.t1));
      gain = std::max(gain, phi.operatorNorm() / std::log1p(gp.mu));
    } else {
      for (double s : {lo, 0.5 * (lo + hi), hi})
        beta = std::max(beta, emb.B_real(nudge(s, pc.s_lo, pc.s_hi)).operatorNorm());
    }
  }
  const double h = v - u;
  return h * std::exp(beta * h) * gain;
}

double ode_residual(const std::vector<MatrixXd>& steps, const std::vector<VectorXd>& c,
                    const std::vector<VectorXd>& x) {
  double r = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k)
    r = std::max(r, (x[k + 1] - steps[k] * x[k] - c[k]).norm() / (1.0 + x[k + 1].norm()));
  return r;
}

}  // namespace

BoundedSolutionResult solve_bounded_single(const EmbeddedSystem& emb, const DichotomySegment& seg,
                                           const BoundedOptions& opts) {
  if (seg.times.size() < 2 || seg.Ps.size() != seg.times.size())
    throw DomainError("dichotomy segment is not certified");
  if (seg.dim() != emb.dim()) throw DomainError("segment dimension does not match the system");
  const int n = emb.dim();
  const auto& T = seg.times;
  const std::size_t N = T.size();
  const MatrixXd I = MatrixXd::Identity(n, n);

  std::vector<VectorXd> ys(N, VectorXd::Zero(n)), yu(N, VectorXd::Zero(n));
  for (std::size_t k = 0; k + 1 < N; ++k)
    ys[k + 1] = seg.Ps[k + 1] * emb.propagate_real(ys[k], T[k], T[k + 1], opts.ode);
  for (std::size_t k = N - 1; k > 0; --k)
    yu[k - 1] = (I - seg.Ps[k - 1]) * emb.propagate_real(yu[k], T[k], T[k - 1], opts.ode);

  BoundedSolutionResult res;
  res.method = "single";
  res.psi.times = T;
  res.psi.values.resize(N);
  for (std::size_t k = 0; k < N; ++k) res.psi.values[k] = ys[k] + yu[k];
  res.K = res.psi.sup_norm();
  res.forcing_sup = sup_forcing(emb, T);
  double ps = 0.0, pu = 0.0;
  for (const auto& P : seg.Ps) {
    ps = std::max(ps, P.operatorNorm());
    pu = std::max(pu, (I - P).operatorNorm());
  }
  res.greens_bound = seg.a * (ps + pu) / seg.lambda * res.forcing_sup;
  res.truncation_bound =
      seg.a * std::exp(-seg.lambda * 0.5 * (seg.s_hi - seg.s_lo)) * res.forcing_sup / seg.lambda;
  res.ode_residual = ode_residual(seg.steps, particular(emb, T, opts.ode), res.psi.values);
  if (res.K > res.greens_bound * (1.0 + 1e-6) + 1e-12)
    res.warnings.push_back("sup norm " + fmt(res.K) + " exceeds the Green's bound " + fmt(res.greens_bound));
  return res;
}

BoundedSolutionResult solve_bounded_profile(const EmbeddedSystem& emb, const DichotomyProfile& profile,
                                            const BoundedOptions& opts) {
  if (!profile.condition_II)
    throw ConditionViolation("profile is not hyperbolic on every segment");
  if (!profile.condition_III)
    throw ConditionViolation("stable dimensions do not increase across the breaks");
  if (!profile.condition_IV)
    throw ConditionViolation("unstable and next stable subspaces are not transversal");
  const int n = emb.dim();
  const std::size_t k_seg = profile.results.size();

  std::vector<double> T;
  std::vector<MatrixXd> steps;
  for (std::size_t j = 0; j < k_seg; ++j) {
    const auto& seg = profile.segment(j);
    if (seg.dim() != n) throw DomainError("segment dimension does not match the system");
    T.insert(T.end(), seg.times.begin() + (j == 0 ? 0 : 1), seg.times.end());
    steps.insert(steps.end(), seg.steps.begin(), seg.steps.end());
  }
  const std::size_t N = T.size();
  const auto c = particular(emb, T, opts.ode);

  const auto& first = profile.segment(0);
  const auto& last = profile.segment(k_seg - 1);
  const MatrixXd Lleft = coordinates(first.Es.front(), first.Eu.front()).topRows(first.dim_s);
  const MatrixXd Lright = coordinates(last.Es.back(), last.Eu.back()).bottomRows(last.dim_u);

  // Rows: left condition, N-1 step blocks, right condition.
  const auto nx = static_cast<Eigen::Index>(n * N);
  const auto m_left = Lleft.rows(), m_right = Lright.rows();
  const auto m = m_left + static_cast<Eigen::Index>(n * (N - 1)) + m_right;
  std::vector<Eigen::Triplet<double>> trip;
  auto put = [&](Eigen::Index r, Eigen::Index col, double v) {
    if (v != 0.0) {
      trip.emplace_back(nx + r, col, v);
      trip.emplace_back(col, nx + r, v);
    }
  };
  for (Eigen::Index i = 0; i < nx; ++i) trip.emplace_back(i, i, 1.0);
  VectorXd rhs = VectorXd::Zero(nx + m);
  for (Eigen::Index i = 0; i < m_left; ++i)
    for (int j = 0; j < n; ++j) put(i, j, Lleft(i, j));
  for (std::size_t k = 0; k + 1 < N; ++k) {
    const Eigen::Index r0 = m_left + static_cast<Eigen::Index>(n * k);
    const Eigen::Index ck = static_cast<Eigen::Index>(n * k), ck1 = static_cast<Eigen::Index>(n * (k + 1));
    for (int i = 0; i < n; ++i) {
      put(r0 + i, ck1 + i, 1.0);
      for (int j = 0; j < n; ++j) put(r0 + i, ck + j, -steps[k](i, j));
      rhs(nx + r0 + i) = c[k](i);
    }
  }
  const Eigen::Index rr = m_left + static_cast<Eigen::Index>(n * (N - 1));
  const Eigen::Index clast = static_cast<Eigen::Index>(n * (N - 1));
  for (Eigen::Index i = 0; i < m_right; ++i)
    for (int j = 0; j < n; ++j) put(rr + i, clast + j, Lright(i, j));

  Eigen::SparseMatrix<double> KKT(nx + m, nx + m);
  KKT.setFromTriplets(trip.begin(), trip.end());
  KKT.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(KKT);
  lu.factorize(KKT);
  auto singular = [&]() {
    std::string where;
    for (std::size_t j = 0; j < profile.angles.size(); ++j)
      where += " alpha_" + std::to_string(j + 1) + "=" + fmt(profile.angles[j]);
    return CertificationError("collocation system is singular; transversality angles:" +
                              (where.empty() ? std::string(" none") : where));
  };
  if (lu.info() != Eigen::Success) throw singular();
  const VectorXd sol = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !sol.allFinite()) throw singular();

  BoundedSolutionResult res;
  res.method = "collocation";
  res.psi.times = T;
  res.psi.values.resize(N);
  for (std::size_t k = 0; k < N; ++k) res.psi.values[k] = sol.segment(static_cast<Eigen::Index>(n * k), n);
  res.K = res.psi.sup_norm();
  res.forcing_sup = sup_forcing(emb, T);
  res.ode_residual = ode_residual(steps, c, res.psi.values);
  const double T_thr = threshold_T(profile.a, profile.lambda, profile.alpha);
  if (k_seg > 1 && profile.min_segment_length < T_thr)
    res.warnings.push_back("shortest segment " + fmt(profile.min_segment_length) +
                           " is below the threshold " + fmt(T_thr));

  if (opts.operator_bound) {
    std::vector<double> gain(N - 1);
    for (std::size_t k = 0; k + 1 < N; ++k) gain[k] = step_gain(emb, T[k], T[k + 1]);
    double bound = 0.0;
    VectorXd e = VectorXd::Zero(nx + m);
    for (std::size_t k = 0; k < N; ++k) {
      MatrixXd rows(nx + m, n);
      for (int i = 0; i < n; ++i) {
        e.setZero();
        e(static_cast<Eigen::Index>(n * k) + i) = 1.0;
        rows.col(i) = lu.solve(e);
      }
      double acc = 0.0;
      for (std::size_t j = 0; j + 1 < N; ++j) {
        const auto blk = rows.middleRows(nx + m_left + static_cast<Eigen::Index>(n * j), n);
        acc += MatrixXd(blk).operatorNorm() * gain[j];
      }
      bound = std::max(bound, acc);
    }
    res.operator_bound = bound;
  }
  return res;
}

BoundedSolutionResult pull_back_and_certify(BoundedSolutionResult result, const EmbeddedSystem& emb,
                                            const TimeScaleLinearSystem& sys, const BoundedOptions& opts) {
  if (result.psi.size() == 0) throw DomainError("no ODE-side solution to pull back");
  const auto& ts = sys.scale();
  const auto& map = emb.map();
  const int n = sys.dim();
  const MatrixXd I = MatrixXd::Identity(n, n);
  result.phi = pull_back(emb, result.psi);
  result.K = result.phi.size() > 0 ? result.phi.sup_norm() : 0.0;
  result.max_jump_residual = 0.0;
  result.max_dense_residual = 0.0;

  const double t_first = result.phi.size() ? result.phi.times.front() : 0.0;
  const double t_last = result.phi.size() ? result.phi.times.back() : 0.0;
  const auto& comps = ts.components();
  for (std::size_t i = 0; i + 1 < comps.size(); ++i) {
    const double r = comps[i].hi, next = comps[i + 1].lo;
    if (r < t_first - 1e-12 || next > t_last + 1e-12) continue;
    const VectorXd& x = result.phi.at(r);
    const VectorXd& y = result.phi.at(next);
    const double mu = next - r;
    const double res = (y - (I + mu * sys.A(r)) * x - mu * sys.f(r)).norm() / (1.0 + x.norm());
    if (res > result.max_jump_residual || !result.worst_jump_time) {
      result.max_jump_residual = std::max(result.max_jump_residual, res);
      if (res >= result.max_jump_residual) result.worst_jump_time = r;
    }
  }

  // Dense parts: psi at a fine uniform grid by short integrations from the nearest
  // earlier sample, then fourth-order differences.
  const auto& S = result.psi.times;
  for (const auto& c : comps) {
    if (c.is_point()) continue;
    const double lo = std::max(c.lo, t_first), hi = std::min(c.hi, t_last);
    if (!(hi > lo)) continue;
    const long M = std::max<long>(4, static_cast<long>(std::ceil((hi - lo) / opts.certify_h)));
    const double d = (hi - lo) / static_cast<double>(M);
    std::vector<double> tt(M + 1);
    std::vector<VectorXd> xx(M + 1);
    std::size_t k = 0;
    VectorXd cur;
    double cur_s = 0.0;
    for (long i = 0; i <= M; ++i) {
      tt[i] = lo + d * static_cast<double>(i);
      const double s = std::clamp(map.apply(tt[i]), S.front(), S.back());
      const std::size_t k_new = static_cast<std::size_t>(std::upper_bound(S.begin(), S.end(), s) - S.begin()) - 1;
      if (i == 0 || k_new != k) {
        k = std::min(k_new, S.size() - 1);
        cur = result.psi.values[k];
        cur_s = S[k];
      }
      cur = emb.propagate_real(cur, cur_s, s, opts.ode);
      cur_s = s;
      xx[i] = cur;
    }
    const auto& brk = sys.breaks();
    for (long i = 0; i <= M; ++i) {
      long j0 = std::clamp<long>(i - 2, 0, M - 4);
      const double t_lo = tt[j0], t_hi = tt[j0 + 4];
      bool straddles = false;
      for (double b : brk)
        if (b > t_lo && b < t_hi) straddles = true;
      if (straddles) continue;
      VectorXd deriv;
      const long o = i - j0;  // position of i inside the stencil
      switch (o) {
        case 0: deriv = (-25 * xx[j0] + 48 * xx[j0 + 1] - 36 * xx[j0 + 2] + 16 * xx[j0 + 3] - 3 * xx[j0 + 4]) / (12 * d); break;
        case 1: deriv = (-3 * xx[j0] - 10 * xx[j0 + 1] + 18 * xx[j0 + 2] - 6 * xx[j0 + 3] + xx[j0 + 4]) / (12 * d); break;
        case 2: deriv = (xx[j0] - 8 * xx[j0 + 1] + 8 * xx[j0 + 3] - xx[j0 + 4]) / (12 * d); break;
        case 3: deriv = (-xx[j0] + 6 * xx[j0 + 1] - 18 * xx[j0 + 2] + 10 * xx[j0 + 3] + 3 * xx[j0 + 4]) / (12 * d); break;
        default: deriv = (3 * xx[j0] - 16 * xx[j0 + 1] + 36 * xx[j0 + 2] - 48 * xx[j0 + 3] + 25 * xx[j0 + 4]) / (12 * d); break;
      }
      const double tq = nudge(tt[i], t_lo, t_hi);
      const double res = (deriv - sys.A(tq) * xx[i] - sys.f(tq)).norm() / (1.0 + xx[i].norm());
      if (res > result.max_dense_residual || !result.worst_dense_time) {
        result.max_dense_residual = std::max(result.max_dense_residual, res);
        if (res >= result.max_dense_residual) result.worst_dense_time = tt[i];
      }
    }
  }

  if (result.max_jump_residual > opts.jump_tol)
    throw CertificationError("jump residual " + fmt(result.max_jump_residual) + " at t = " +
                             fmt(*result.worst_jump_time));
  if (result.max_dense_residual > opts.dense_tol)
    throw CertificationError("dense residual " + fmt(result.max_dense_residual) + " at t = " +
                             fmt(*result.worst_dense_time));
  result.certified = true;
  return result;
}

LinearityReport operator_linearity_check(const EmbeddedSystem& emb, const DichotomyProfile& profile,
                                         const VectorFunction& f1, const VectorFunction& f2, double c,
                                         const BoundedOptions& opts) {
  BoundedOptions o = opts;
  o.operator_bound = false;
  const VectorFunction comb = [&f1, &f2, c](double t) -> VectorXd { return c * f1(t) + f2(t); };
  const auto r1 = solve_bounded_profile(emb.with_forcing(f1), profile, o);
  const auto r2 = solve_bounded_profile(emb.with_forcing(f2), profile, o);
  const auto r12 = solve_bounded_profile(emb.with_forcing(comb), profile, o);
  LinearityReport rep;
  for (std::size_t k = 0; k < r12.psi.size(); ++k)
    rep.defect = std::max(rep.defect, (r12.psi.values[k] - c * r1.psi.values[k] - r2.psi.values[k]).norm());
  double fsup = 0.0;
  const auto& ts = emb.system().scale();
  for (double t : ts.sampling_grid(ts.default_h())) fsup = std::max(fsup, comb(t).norm());
  rep.scale = 1.0 + fsup;
  rep.holds = rep.defect <= 1e-8 * rep.scale;
  return rep;
}

}  // namespace tsdyn
