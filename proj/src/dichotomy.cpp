#include "tsdyn/dichotomy.hpp"

#include "tsdyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace tsdyn {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kHalfPi = 1.57079632679489661923;

MatrixXd thin_q(const MatrixXd& M) {
  Eigen::HouseholderQR<MatrixXd> qr(M);
  return qr.householderQ() * MatrixXd::Identity(M.rows(), M.cols());
}

// Orthonormal basis of span(M); DomainError when the columns are dependent.
MatrixXd orth(const MatrixXd& M) {
  if (M.cols() == 0) throw DomainError("subspace basis has no columns");
  Eigen::ColPivHouseholderQR<MatrixXd> qr(M);
  qr.setThreshold(1e-12);
  if (qr.rank() < M.cols()) throw DomainError("subspace basis is rank deficient");
  return qr.householderQ() * MatrixXd::Identity(M.rows(), M.cols());
}

// Orthonormal basis of the range of a rank-k matrix.
MatrixXd range_basis(const MatrixXd& M, int k) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(M);
  return qr.householderQ() * MatrixXd::Identity(M.rows(), k);
}

double sigma_min(const MatrixXd& M) {
  Eigen::JacobiSVD<MatrixXd> svd(M);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

// sin of the largest principal angle between two subspaces of equal dimension.
double subspace_gap(const MatrixXd& A, const MatrixXd& B) {
  if (A.cols() == 0) return 0.0;
  const MatrixXd Qa = thin_q(A), Qb = thin_q(B);
  const MatrixXd R = Qa - Qb * (Qb.transpose() * Qa);
  Eigen::JacobiSVD<MatrixXd> svd(R);
  return svd.singularValues()(0);
}

MatrixXd sign_function(const MatrixXd& B) {
  const auto n = B.rows();
  MatrixXd S = B;
  for (int it = 0; it < 100; ++it) {
    const Eigen::PartialPivLU<MatrixXd> lu(S);
    const MatrixXd Si = lu.inverse();
    const double c = it < 20 ? std::pow(std::abs(lu.determinant()), -1.0 / static_cast<double>(n)) : 1.0;
    const MatrixXd next = 0.5 * (c * S + Si / c);
    const double change = (next - S).norm();
    S = next;
    if (change <= 1e-14 * S.norm()) break;
  }
  return S;
}

struct PairBound {
  double d;
  double log_r;
};

double prefactor(const std::vector<PairBound>& pairs, double lambda) {
  double m = 0.0;
  for (const auto& p : pairs) m = std::max(m, p.log_r + lambda * p.d);
  return std::exp(m);
}

std::vector<double> segment_grid(const EmbeddedSystem& emb, double s_lo, double s_hi, double h) {
  std::vector<double> out{s_lo};
  const double tol = 1e-10 * std::max(1.0, s_hi - s_lo);
  for (double s : emb.sample_grid(h))
    if (s > s_lo + tol && s < s_hi - tol) out.push_back(s);
  out.push_back(s_hi);
  return out;
}

}  // namespace

std::size_t DichotomySegment::index_of(double s) const {
  auto it = std::lower_bound(times.begin(), times.end(), s - 1e-9 * std::max(1.0, std::abs(s)));
  if (it == times.end() || std::abs(*it - s) > 1e-9 * std::max(1.0, std::abs(s)))
    throw DomainError("s is not a sample time of the dichotomy segment");
  return static_cast<std::size_t>(it - times.begin());
}

Eigen::MatrixXd DichotomySegment::unstable_projection(double s) const {
  const auto n = Ps.front().rows();
  return MatrixXd::Identity(n, n) - Ps[index_of(s)];
}

DichotomyResult estimate_dichotomy(const EmbeddedSystem& emb, double s_lo, double s_hi,
                                   std::optional<double> lambda_hint, const DichotomyOptions& opts) {
  if (!emb.real_valued())
    throw DomainError("dichotomy estimation needs a real-valued embedding");
  if (!(s_hi > s_lo)) throw DomainError("segment requires s_lo < s_hi");
  if (s_lo < emb.s_min() - 1e-12 || s_hi > emb.s_max() + 1e-12)
    throw DomainError("segment outside the renormalized window");
  const double len = s_hi - s_lo;
  const double h = opts.h_grid > 0.0 ? opts.h_grid : len / 200.0;
  if (len < 10.0 * h * (1.0 - 1e-12)) throw DomainError("segment shorter than 10 sample spacings");

  const int n = emb.dim();
  const MatrixXd I = MatrixXd::Identity(n, n);
  DichotomyResult res;
  DichotomySegment seg;
  seg.s_lo = s_lo;
  seg.s_hi = s_hi;
  seg.times = segment_grid(emb, s_lo, s_hi, h);
  const std::size_t N = seg.times.size();
  seg.steps.resize(N - 1);
  for (std::size_t k = 0; k + 1 < N; ++k)
    seg.steps[k] = emb.transition_real(seg.times[k + 1], seg.times[k], opts.ode);

  const MatrixXd B0 = emb.B_real(0.5 * (seg.times[0] + seg.times[1]));
  seg.constant_B = true;
  for (std::size_t k = 0; k + 1 < N && seg.constant_B; ++k) {
    const MatrixXd Bk = emb.B_real(0.5 * (seg.times[k] + seg.times[k + 1]));
    if ((Bk - B0).norm() > 1e-13 * (1.0 + B0.norm())) seg.constant_B = false;
  }

  double lambda0 = 0.0;
  if (seg.constant_B) {
    const Eigen::VectorXcd ev = B0.eigenvalues();
    double min_re = std::numeric_limits<double>::infinity();
    int ks = 0;
    for (int i = 0; i < n; ++i) {
      min_re = std::min(min_re, std::abs(ev(i).real()));
      if (ev(i).real() < 0.0) ++ks;
    }
    if (min_re <= opts.zero_real_tol * std::max(1.0, B0.norm())) {
      res.reason = "constant coefficient matrix has an eigenvalue with zero real part";
      return res;
    }
    seg.dim_s = ks;
    seg.dim_u = n - ks;
    seg.gap_ratio = std::numeric_limits<double>::infinity();
    const MatrixXd S = sign_function(B0);
    const MatrixXd Es = ks > 0 ? range_basis(0.5 * (I - S), ks) : MatrixXd(n, 0);
    const MatrixXd Eu = ks < n ? range_basis(0.5 * (I + S), n - ks) : MatrixXd(n, 0);
    seg.Es.assign(N, Es);
    seg.Eu.assign(N, Eu);
    lambda0 = min_re;
  } else {
    // Growth rates by the discrete QR method from a generic orthonormal frame.
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    MatrixXd Q = MatrixXd::NullaryExpr(n, n, [&]() { return gauss(rng); });
    Q = thin_q(Q);
    VectorXd logs = VectorXd::Zero(n);
    for (const auto& st : seg.steps) {
      Eigen::HouseholderQR<MatrixXd> qr(st * Q);
      const MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
      MatrixXd Qn = qr.householderQ() * I;
      for (int i = 0; i < n; ++i) {
        if (R(i, i) < 0.0) Qn.col(i) = -Qn.col(i);
        logs(i) += std::log(std::max(std::abs(R(i, i)), 1e-300));
      }
      Q = Qn;
    }
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return logs(x) > logs(y); });
    res.log_stretch.resize(n);
    for (int i = 0; i < n; ++i) res.log_stretch[i] = logs(order[i]);
    const auto& ls = res.log_stretch;
    int ku = 0;
    while (ku < n && ls[ku] > 0.0) ++ku;
    double log_ratio;
    if (ku == 0) log_ratio = -ls[0];
    else if (ku == n) log_ratio = ls[n - 1];
    else log_ratio = ls[ku - 1] - ls[ku];
    seg.gap_ratio = std::exp(log_ratio);
    if (!(log_ratio >= std::log(opts.gap_tol))) {
      res.reason = "no growth-rate gap of ratio >= " + std::to_string(opts.gap_tol) +
                   " in the transition matrix over the segment";
      return res;
    }
    bool nested = true;
    for (int i = 0; i < ku; ++i)
      if (order[i] >= ku) nested = false;
    if (!nested) {
      res.reason = "growth rates are not ordered along the propagated frame";
      return res;
    }
    seg.dim_u = ku;
    seg.dim_s = n - ku;
    lambda0 = std::numeric_limits<double>::infinity();
    if (ku > 0) lambda0 = std::min(lambda0, ls[ku - 1] / len);
    if (ku < n) lambda0 = std::min(lambda0, -ls[ku] / len);

    // Es backward from the complement of the dominant frame at the right end, then
    // Eu forward from the complement of Es at the left end.
    auto complement = [&](const MatrixXd& M, int k) -> MatrixXd {
      if (k == 0) return MatrixXd(n, 0);
      if (M.cols() == 0) return I.leftCols(k);
      Eigen::HouseholderQR<MatrixXd> qr(M);
      return (qr.householderQ() * I).rightCols(k);
    };
    seg.Eu.resize(N);
    seg.Es.resize(N);
    seg.Es[N - 1] = complement(Q.leftCols(ku), n - ku);
    for (std::size_t k = N - 1; k > 0; --k)
      seg.Es[k - 1] = ku < n ? thin_q(seg.steps[k - 1].partialPivLu().solve(seg.Es[k])) : MatrixXd(n, 0);
    seg.Eu[0] = complement(seg.Es[0], ku);
    for (std::size_t k = 0; k + 1 < N; ++k)
      seg.Eu[k + 1] = ku > 0 ? thin_q(seg.steps[k] * seg.Eu[k]) : MatrixXd(n, 0);
  }
  if (lambda_hint && *lambda_hint > 0.0) lambda0 = std::min(lambda0, *lambda_hint);
  if (!(lambda0 > 0.0)) {
    res.reason = "no positive exponential rate";
    return res;
  }

  seg.Ps.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    MatrixXd basis(n, n);
    basis << seg.Es[k], seg.Eu[k];
    Eigen::FullPivLU<MatrixXd> lu(basis);
    if (sigma_min(basis) < 1e-10) {
      res.reason = "stable and unstable subspaces are not transversal at s = " +
                   std::to_string(seg.times[k]);
      return res;
    }
    MatrixXd left = MatrixXd::Zero(n, n);
    left.leftCols(seg.dim_s) = seg.Es[k];
    seg.Ps[k] = left * lu.inverse();
  }
  for (std::size_t k = 0; k + 1 < N; ++k) {
    seg.invariance_error = std::max(seg.invariance_error, subspace_gap(seg.steps[k] * seg.Es[k], seg.Es[k + 1]));
    seg.invariance_error = std::max(seg.invariance_error, subspace_gap(seg.steps[k] * seg.Eu[k], seg.Eu[k + 1]));
  }

  // Certification on a subsample: coarse steps between chosen indices.
  std::vector<std::size_t> idx;
  const std::size_t M = std::min(N, std::max<std::size_t>(2, opts.max_certify_points));
  for (std::size_t m = 0; m < M; ++m)
    idx.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(m) * (N - 1) / (M - 1))));
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  const std::size_t K = idx.size();
  std::vector<MatrixXd> fwd(K - 1), bwd(K - 1);
  for (std::size_t m = 0; m + 1 < K; ++m) {
    MatrixXd F = I, G = I;
    for (std::size_t k = idx[m]; k < idx[m + 1]; ++k) {
      F = seg.steps[k] * F;
      G = G * seg.steps[k].partialPivLu().inverse();
    }
    fwd[m] = F;
    bwd[m] = G;
  }
  std::vector<PairBound> pairs;
  pairs.reserve(K * (K - 1));
  if (seg.dim_s > 0) {
    for (std::size_t j = 1; j < K; ++j) {
      MatrixXd X = seg.Es[idx[j]];
      for (std::size_t i = j; i-- > 0;) {
        X = bwd[i] * X;
        pairs.push_back({seg.times[idx[j]] - seg.times[idx[i]], -std::log(sigma_min(X))});
      }
    }
  }
  if (seg.dim_u > 0) {
    for (std::size_t i = 0; i + 1 < K; ++i) {
      MatrixXd X = seg.Eu[idx[i]];
      for (std::size_t j = i + 1; j < K; ++j) {
        X = fwd[j - 1] * X;
        pairs.push_back({seg.times[idx[j]] - seg.times[idx[i]], -std::log(sigma_min(X))});
      }
    }
  }

  double lambda = lambda0;
  double a = std::max(1.0, prefactor(pairs, lambda));
  if (a > opts.a_cap) {
    if (prefactor(pairs, 0.0) > opts.a_cap) {
      res.reason = "decay prefactor exceeds a_cap even at zero rate";
      return res;
    }
    double lo = 0.0, hi = lambda0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (prefactor(pairs, mid) <= opts.a_cap) lo = mid;
      else hi = mid;
    }
    lambda = lo;
    a = std::max(1.0, prefactor(pairs, lambda));
    if (!(lambda > 0.0)) {
      res.reason = "no positive rate with prefactor below a_cap";
      return res;
    }
  }
  seg.lambda = lambda;
  seg.a = a;
  res.hyperbolic = true;
  res.segment = std::move(seg);
  return res;
}

std::vector<double> principal_angles(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V) {
  if (U.rows() != V.rows()) throw DomainError("subspaces live in different dimensions");
  MatrixXd Qa = orth(U), Qb = orth(V);
  if (Qa.cols() > Qb.cols()) std::swap(Qa, Qb);
  const auto k = Qa.cols();
  Eigen::JacobiSVD<MatrixXd> cs(Qa.transpose() * Qb);
  const VectorXd cosv = cs.singularValues();  // descending
  Eigen::JacobiSVD<MatrixXd> ss(Qa - Qb * (Qb.transpose() * Qa));
  VectorXd sinv = ss.singularValues();  // descending
  std::vector<double> out(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    const double c = std::min(1.0, cosv(i));
    const double s = std::min(1.0, sinv(k - 1 - i));
    out[static_cast<std::size_t>(i)] = c >= std::sqrt(0.5) ? std::asin(s) : std::acos(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double subspace_angle(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V) {
  const auto n = U.rows();
  const MatrixXd Qa = orth(U), Qb = orth(V);
  MatrixXd both(n, Qa.cols() + Qb.cols());
  both << Qa, Qb;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(both);
  qr.setThreshold(1e-10);
  if (qr.rank() < n) return 0.0;
  const auto angles = principal_angles(Qa, Qb);
  const auto skip = static_cast<std::size_t>(Qa.cols() + Qb.cols() - n);
  return skip < angles.size() ? angles[skip] : kHalfPi;
}

const DichotomySegment& DichotomyProfile::segment(std::size_t j) const {
  if (j >= results.size() || !results[j].segment) throw DomainError("segment is not hyperbolic");
  return *results[j].segment;
}

DichotomyProfile build_profile(const EmbeddedSystem& emb, const std::vector<double>& break_times,
                               std::optional<double> lambda_hint, const DichotomyOptions& opts) {
  DichotomyProfile prof;
  prof.breaks.push_back(emb.s_min());
  for (double b : break_times) {
    if (!(b > prof.breaks.back()) || !(b < emb.s_max()))
      throw DomainError("break times must be increasing and inside the renormalized window");
    prof.breaks.push_back(b);
  }
  prof.breaks.push_back(emb.s_max());
  const std::size_t k = prof.breaks.size() - 1;

  prof.condition_II = true;
  prof.min_segment_length = std::numeric_limits<double>::infinity();
  prof.lambda = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    prof.results.push_back(estimate_dichotomy(emb, prof.breaks[j], prof.breaks[j + 1], lambda_hint, opts));
    const auto& r = prof.results.back();
    prof.min_segment_length = std::min(prof.min_segment_length, prof.breaks[j + 1] - prof.breaks[j]);
    if (!r.hyperbolic) {
      prof.condition_II = false;
      prof.dims_s.push_back(-1);
      prof.diagnostics.push_back("segment " + std::to_string(j) + " not hyperbolic: " + r.reason);
      continue;
    }
    prof.dims_s.push_back(r.segment->dim_s);
    prof.a = std::max(prof.a, r.segment->a);
    prof.lambda = std::min(prof.lambda, r.segment->lambda);
  }
  if (!prof.condition_II) {
    prof.lambda = 0.0;
    prof.alpha = 0.0;
    return prof;
  }

  prof.condition_III = true;
  prof.alpha = kHalfPi;
  const int n = emb.dim();
  for (std::size_t j = 0; j + 1 < k; ++j) {
    if (!(prof.dims_s[j] < prof.dims_s[j + 1])) {
      prof.condition_III = false;
      prof.diagnostics.push_back("dim E^s does not increase across break " + std::to_string(j + 1));
    }
    const auto& left = *prof.results[j].segment;
    const auto& right = *prof.results[j + 1].segment;
    const MatrixXd& Eu = left.Eu.back();
    const MatrixXd& Es = right.Es.front();
    double angle;
    if (Eu.cols() == 0) angle = Es.cols() == n ? kHalfPi : 0.0;
    else if (Es.cols() == 0) angle = Eu.cols() == n ? kHalfPi : 0.0;
    else angle = subspace_angle(Eu, Es);
    prof.angles.push_back(angle);
    prof.alpha = std::min(prof.alpha, angle);
  }
  prof.condition_IV = prof.alpha > 1e-8;
  if (!prof.condition_IV) prof.diagnostics.push_back("E^u and the next E^s are not transversal");
  if (prof.holds() && k > 1) {
    const double T = threshold_T(prof.a, prof.lambda, prof.alpha);
    if (prof.min_segment_length < T)
      prof.diagnostics.push_back("shortest segment " + std::to_string(prof.min_segment_length) +
                                 " is below the threshold T = " + std::to_string(T));
  }
  return prof;
}

double threshold_T(double a, double lambda, double alpha) {
  if (!(a > 0.0) || !(lambda > 0.0) || !(alpha > 0.0) || alpha > kHalfPi * (1.0 + 1e-12))
    throw DomainError("threshold_T needs a > 0, lambda > 0, 0 < alpha <= pi/2");
  const double t1 = 3.0 / lambda * std::log(288.0 * a * a / (alpha * std::sin(alpha / 4.0)));
  const double t2 = 3.0 / lambda * std::log(3.0 * a * (2.0 / std::sin(alpha / 2.0) + 1.0));
  return std::max({t1, t2, 0.0}) * (1.0 + 1e-9);
}

FamilyReport check_family(const ParameterFamily& fam,
                          const std::function<std::vector<double>(const Eigen::VectorXd&)>& break_times,
                          std::size_t n_samples, std::optional<double> lambda_hint,
                          const DichotomyOptions& opts, LogMode mode) {
  if (!fam.make) throw DomainError("parameter family has no system constructor");
  if (fam.samples.empty()) throw DomainError("parameter family has no samples");
  std::vector<std::size_t> chosen;
  const std::size_t total = fam.samples.size();
  if (n_samples == 0 || n_samples >= total) {
    for (std::size_t i = 0; i < total; ++i) chosen.push_back(i);
  } else {
    for (std::size_t m = 0; m < n_samples; ++m)
      chosen.push_back(n_samples == 1 ? 0 : m * (total - 1) / (n_samples - 1));
  }

  FamilyReport rep;
  rep.all_hold = true;
  rep.alpha = kHalfPi;
  rep.lambda = std::numeric_limits<double>::infinity();
  rep.min_segment_length = std::numeric_limits<double>::infinity();
  bool any_ok = false, non_syndetic = false;
  std::optional<int> dim;
  for (std::size_t i : chosen) {
    FamilyMemberReport m;
    m.nu = fam.samples[i];
    try {
      const auto sys = fam.make(m.nu);
      if (dim && *dim != sys.dim()) throw DomainError("family members have different dimensions");
      dim = sys.dim();
      if (!sys.scale().syndetic_hint()) non_syndetic = true;
      const auto emb = embed(sys, mode);
      std::vector<double> sb;
      for (double t : break_times ? break_times(m.nu) : std::vector<double>{})
        sb.push_back(emb.map().apply(t));
      m.profile = build_profile(emb, sb, lambda_hint, opts);
      m.ok = m.profile->holds();
      if (!m.ok) {
        m.error = m.profile->diagnostics.empty() ? "conditions II-IV fail" : m.profile->diagnostics.front();
      } else {
        any_ok = true;
        rep.a = std::max(rep.a, m.profile->a);
        rep.lambda = std::min(rep.lambda, m.profile->lambda);
        rep.alpha = std::min(rep.alpha, m.profile->alpha);
        rep.min_segment_length = std::min(rep.min_segment_length, m.profile->min_segment_length);
      }
    } catch (const std::exception& e) {
      m.ok = false;
      m.error = e.what();
    }
    rep.all_hold = rep.all_hold && m.ok;
    rep.members.push_back(std::move(m));
  }
  if (any_ok) {
    rep.threshold = threshold_T(rep.a, rep.lambda, rep.alpha);
    rep.segments_exceed_threshold = rep.min_segment_length >= rep.threshold;
  } else {
    rep.lambda = 0.0;
    rep.alpha = 0.0;
    rep.min_segment_length = 0.0;
  }
  if (non_syndetic)
    rep.notes.push_back("non-syndetic scale: conditions I-IV can hold only for uniformly unstable systems");
  return rep;
}

}  // namespace tsdyn
