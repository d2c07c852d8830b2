#include "tsdyn/bounded_solutions.hpp"
#include "tsdyn/dichotomy.hpp"
#include "tsdyn/embedding.hpp"
#include "tsdyn/errors.hpp"
#include "tsdyn/linear_timescale.hpp"
#include "tsdyn/matrix_functions.hpp"
#include "tsdyn/renormalization.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace tsdyn;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

constexpr double kPi = 3.14159265358979323846;
int failures = 0;

void report(int k, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", k, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

MatrixXd random_matrix(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> N(0.0, 1.0);
  return MatrixXd::NullaryExpr(n, n, [&]() { return N(rng); });
}

// Intervals and isolated points alternating at random inside [lo, hi].
TimeScaleWindow random_scale(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<Component> comps;
  double t = lo;
  while (t < hi) {
    if (U(rng) < 0.55) {
      const double len = 0.3 + 3.7 * U(rng);
      comps.push_back({t, std::min(t + len, hi)});
      t += len;
    } else {
      comps.push_back({t, t});
    }
    t += 0.05 + 2.0 * U(rng);
  }
  return TimeScaleWindow(lo, hi, std::move(comps));
}

double random_point(std::mt19937_64& rng, const TimeScaleWindow& ts) {
  std::uniform_int_distribution<std::size_t> pick(0, ts.size() - 1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto& c = ts.components()[pick(rng)];
  return c.lo + U(rng) * (c.hi - c.lo);
}

// 1. Transition matrices of the scale system and of its embedding agree.
void criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  std::size_t min_pairs = 1u << 30;
  int done = 0;
  while (done < 25) {
    const int dim = 1 + done % 4;
    const double len = 10.0 + 40.0 * U(rng);
    auto ts = random_scale(rng, 0.0, len);
    const MatrixXd M0 = random_matrix(rng, dim), M1 = random_matrix(rng, dim);
    const double scale = 1.0 / (M0.operatorNorm() + M1.operatorNorm());
    const double w = 0.2 + 2.0 * U(rng);
    const TimeScaleLinearSystem sys(ts, dim, [=](double t) -> MatrixXd { return scale * (M0 + std::sin(w * t) * M1); });
    if (check_regressive(sys).margin < 0.1) continue;
    const auto emb = embed(sys, LogMode::ComplexAllowed);
    VerifyOptions vo;
    vo.n_pairs = 60;
    vo.seed = 500 + static_cast<std::uint64_t>(done);
    vo.check_solution = false;
    const auto rep = verify_embedding(sys, emb, vo);
    worst = std::max(worst, rep.max_deviation);
    min_pairs = std::min(min_pairs, rep.pairs);
    ++done;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(1, worst <= 1e-6 && min_pairs >= 50 && secs <= 120.0,
         fmt("max relative deviation %.3g over 25 instances, >= %.0f pairs each, %.1f s", worst,
             static_cast<double>(min_pairs), secs));
}

// 2. The gap flow reproduces the jump map; oracle is an augmented matrix exponential.
void criterion_2() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> D(1, 4);
  double worst = 0.0;
  int done = 0;
  while (done < 100) {
    const int n = D(rng);
    const double mu = 0.1 + 9.9 * U(rng);
    const MatrixXd A = random_matrix(rng, n) / std::sqrt(static_cast<double>(n));
    const MatrixXd J = MatrixXd::Identity(n, n) + mu * A;
    if (J.jacobiSvd().singularValues().minCoeff() < 0.05) continue;
    const VectorXd f = random_matrix(rng, n).col(0), v = random_matrix(rng, n).col(0);
    const double L = std::log1p(mu);
    const MatrixXcd B = log_one_plus_complex(mu, A) / std::complex<double>(L);
    const VectorXcd g = phi_fun_complex(mu, A) * f.cast<std::complex<double>>() / std::complex<double>(L);
    MatrixXcd aug = MatrixXcd::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = B * L;
    aug.topRightCorner(n, 1) = g * L;
    const MatrixXcd E = aug.exp();
    const VectorXcd end = E.topLeftCorner(n, n) * v.cast<std::complex<double>>() + E.topRightCorner(n, 1);
    const VectorXd target = J * v + mu * f;
    worst = std::max(worst, (end - target.cast<std::complex<double>>()).norm() / std::max(1.0, target.norm()));
    ++done;
  }
  report(2, worst <= 1e-8, fmt("max relative mismatch %.3g over 100 draws, mu in [0.1, 10]", worst));
}

// 3. Matrix-function consistency.
void criterion_3() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> D(1, 5);
  double e_log = 0.0, e_route = 0.0, e_phi = 0.0;
  int done = 0;
  while (done < 200) {
    const int n = D(rng);
    const double mu = 0.05 + 4.0 * U(rng);
    const MatrixXd A = random_matrix(rng, n) / std::sqrt(static_cast<double>(n));
    const MatrixXd J = MatrixXd::Identity(n, n) + mu * A;
    if (J.jacobiSvd().singularValues().minCoeff() < 0.05) continue;
    const MatrixXcd back = log_one_plus_complex(mu, A).exp();
    e_log = std::max(e_log, (back - J.cast<std::complex<double>>()).norm() / J.norm());
    ++done;
  }
  done = 0;
  while (done < 200) {
    const int n = D(rng);
    MatrixXd A = random_matrix(rng, n);
    const double mu = (0.05 + 0.45 * U(rng)) / A.operatorNorm();
    const MatrixXd series = detail::log_one_plus_series(mu, A);
    const MatrixXcd schur = detail::log_one_plus_schur(mu, A);
    e_route = std::max(e_route, (series.cast<std::complex<double>>() - schur).norm() / std::max(1.0, series.norm()));
    if (A.jacobiSvd().singularValues().minCoeff() > 1e-3) {
      const MatrixXd via_solve = A.inverse() * log_one_plus(mu, A);
      const MatrixXd ser = detail::phi_fun_series(mu, A);
      e_phi = std::max(e_phi, (ser - via_solve).norm() / std::max(1.0, via_solve.norm()));
    }
    ++done;
  }
  report(3, e_log <= 1e-9 && e_route <= 1e-9 && e_phi <= 1e-9,
         fmt("exp(Ln) %.3g, series vs Schur %.3g, phi series vs A^-1 Ln %.3g", e_log, e_route, e_phi));
}

// 4. Renormalization invariants.
void criterion_4() {
  std::mt19937_64 rng(404);
  bool anchor = true, monotone = true, contract = true;
  double e_gap = 0.0, e_trip = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto ts = random_scale(rng, -25.0, 30.0);
    const auto map = build_renormalization(ts);
    anchor = anchor && map.apply(map.t0()) == 0.0;
    for (int k = 0; k < 100; ++k) {
      double a = random_point(rng, ts), b = random_point(rng, ts);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      monotone = monotone && map.apply(a) < map.apply(b);
    }
    for (const auto& bp : map.breakpoints())
      contract = contract && std::abs(bp.s) <= std::abs(bp.t - map.t0()) + 1e-12;
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
      const double mu = ts.components()[k + 1].lo - ts.components()[k].hi;
      e_gap = std::max(e_gap, std::abs((map.gap_image_hi(k) - map.gap_image_lo(k)) - std::log1p(mu)));
    }
    for (int k = 0; k < 200; ++k) {
      const double t = random_point(rng, ts);
      e_trip = std::max(e_trip, std::abs(map.invert(map.apply(t)) - t));
    }
  }
  report(4, anchor && monotone && contract && e_gap <= 1e-12 && e_trip <= 1e-10,
         std::string("s(t0)=0 ") + (anchor ? "yes" : "no") + ", monotone " + (monotone ? "yes" : "no") +
             ", contraction " + (contract ? "yes" : "no") +
             fmt(", gap error %.3g, round trip %.3g (10 scales, 1000 pairs)", e_gap, e_trip));
}

// 5. Closed-form generalized exponentials.
void criterion_5() {
  double worst = 0.0;
  const auto R = real_scale(0.0, 10.0);
  const auto Z = uniform_scale(0.0, 20.0, 1.0);
  for (double p : {-0.5, 0.3, 1.0}) {
    const auto pf = [p](double) { return p; };
    for (double t : {0.5, 2.0, 5.0, 7.25, 10.0})
      worst = std::max(worst, std::abs(generalized_exp(R, pf, t, 0.0) / std::exp(p * t) - 1.0));
    for (int n = 1; n <= 20; ++n)
      worst = std::max(worst, std::abs(generalized_exp(Z, pf, n, 0.0) / std::pow(1.0 + p, n) - 1.0));
  }
  report(5, worst <= 1e-10, fmt("max relative error %.3g on R and Z for p in {-0.5, 0.3, 1}", worst));
}

// 6. Window classifier against closed-form transition matrices.
void criterion_6() {
  struct Case {
    std::string name;
    TimeScaleLinearSystem sys;
    std::function<MatrixXd(double, double)> Phi;  // closed form, t >= tau on the scale
  };
  const MatrixXd Rot = (MatrixXd(2, 2) << 0, 1, -1, 0).finished();
  const MatrixXd Jor = (MatrixXd(2, 2) << 0, 1, 0, 0).finished();
  auto cst = [](MatrixXd M) { return [M](double) { return M; }; };
  auto scalar = [](double a) { return MatrixXd::Constant(1, 1, a); };
  const double c = std::cos(0.3), s = std::sin(0.3);
  const MatrixXd R03 = (MatrixXd(2, 2) << c, s, -s, c).finished();
  const auto F = [](double t) { return -0.5 * t * (1.0 - std::sin(t)); };
  const TimeScaleWindow mixed(0.0, 40.0, {{0.0, 10.0}, {10.5, 10.5}, {11.0, 25.0}, {25.8, 25.8}, {26.5, 40.0}});
  std::vector<Case> cases;
  cases.push_back({"R, a=-1", TimeScaleLinearSystem(real_scale(0, 40), 1, cst(scalar(-1))),
                   [&](double t, double tau) { return scalar(std::exp(-(t - tau))); }});
  cases.push_back({"Z, a=-1/2", TimeScaleLinearSystem(uniform_scale(0, 40, 1), 1, cst(scalar(-0.5))),
                   [&](double t, double tau) { return scalar(std::pow(0.5, t - tau)); }});
  cases.push_back({"R, rotation", TimeScaleLinearSystem(real_scale(0, 40), 2, cst(Rot)),
                   [&](double t, double tau) { return MatrixXd((Rot * (t - tau)).exp()); }});
  cases.push_back({"Z, orthogonal step", TimeScaleLinearSystem(uniform_scale(0, 40, 1), 2, cst(R03 - MatrixXd::Identity(2, 2))),
                   [&](double t, double tau) {
                     MatrixXd P = MatrixXd::Identity(2, 2);
                     for (int k = 0; k < static_cast<int>(std::lround(t - tau)); ++k) P = R03 * P;
                     return P;
                   }});
  cases.push_back({"R, a=0.1", TimeScaleLinearSystem(real_scale(0, 40), 1, cst(scalar(0.1))),
                   [&](double t, double tau) { return scalar(std::exp(0.1 * (t - tau))); }});
  cases.push_back({"Z, a=1", TimeScaleLinearSystem(uniform_scale(0, 30, 1), 1, cst(scalar(1))),
                   [&](double t, double tau) { return scalar(std::pow(2.0, t - tau)); }});
  cases.push_back({"mixed, a=-1", TimeScaleLinearSystem(mixed, 1, cst(scalar(-1))),
                   [&](double t, double tau) {
                     double logv = 0.0;
                     const auto& comps = mixed.components();
                     for (std::size_t i = 0; i < comps.size(); ++i) {
                       const double lo = std::max(comps[i].lo, tau), hi = std::min(comps[i].hi, t);
                       if (hi > lo) logv -= hi - lo;
                       if (i + 1 < comps.size() && comps[i].hi >= tau && comps[i].hi < t)
                         logv += std::log(1.0 - (comps[i + 1].lo - comps[i].hi));
                     }
                     return scalar(std::exp(logv));
                   }});
  cases.push_back({"R, Jordan block", TimeScaleLinearSystem(real_scale(0, 40), 2, cst(Jor)),
                   [&](double t, double tau) { return MatrixXd(MatrixXd::Identity(2, 2) + Jor * (t - tau)); }});
  cases.push_back({"R, a=-1+sin t", TimeScaleLinearSystem(real_scale(0, 40), 1, [&](double t) { return scalar(-1.0 + std::sin(t)); }),
                   [&](double t, double tau) { return scalar(std::exp(-(t - tau) + std::cos(tau) - std::cos(t))); }});
  cases.push_back({"R, bounded but not uniformly", TimeScaleLinearSystem(real_scale(0, 40), 1, [&](double t) {
                     return scalar(-0.5 * (1.0 - std::sin(t)) + 0.5 * t * std::cos(t));
                   }),
                   [&](double t, double tau) { return scalar(std::exp(F(t) - F(tau))); }});

  int disagreements = 0;
  std::string detail;
  for (const auto& cs : cases) {
    // direct: sup ||Phi|| from the start and over pairs, first half vs whole window
    const auto& ts = cs.sys.scale();
    std::vector<double> grid = ts.sampling_grid(0.1);
    const std::size_t N = grid.size(), half = N / 2;
    double from0 = 0, from0_half = 0, pairs = 0, pairs_half = 0;
    for (std::size_t i = 0; i < N; i += 2)
      for (std::size_t j = i; j < N; ++j) {
        const double nrm = cs.Phi(grid[j], grid[i]).operatorNorm();
        pairs = std::max(pairs, nrm);
        if (j <= half) pairs_half = std::max(pairs_half, nrm);
        if (i == 0) {
          from0 = std::max(from0, nrm);
          if (j <= half) from0_half = std::max(from0_half, nrm);
        }
      }
    StabilityVerdict truth;
    if (from0 >= 1.5 * std::max(1.0, from0_half)) truth = StabilityVerdict::Unstable;
    else if (pairs <= 1.1 * std::max(1.0, pairs_half)) truth = StabilityVerdict::UniformlyStable;
    else truth = StabilityVerdict::Stable;
    const auto got = classify_stability(cs.sys).verdict;
    if (got != truth) {
      ++disagreements;
      detail += " [" + cs.name + ": " + to_string(got) + " vs " + to_string(truth) + "]";
    }
  }
  report(6, disagreements == 0, fmt("%.0f disagreements on %.0f cases", disagreements, static_cast<double>(cases.size())) + detail);
}

// 7. Eigenspaces of constant hyperbolic B.
void criterion_7() {
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst_angle = 0.0, worst_rate = 0.0;
  bool all = true;
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 2 + trial % 3;
    VectorXd d(n);
    for (int i = 0; i < n; ++i) {
      const double mag = 0.5 + 2.0 * U(rng);
      d(i) = (i % 2 == 0 ? -1.0 : 1.0) * mag;
    }
    MatrixXd S = random_matrix(rng, n) + 2.0 * MatrixXd::Identity(n, n);
    const MatrixXd B = S * d.asDiagonal() * S.inverse();
    const TimeScaleLinearSystem sys(real_scale(0.0, 30.0), n, [B](double) { return B; });
    const auto emb = embed(sys);
    const auto r = estimate_dichotomy(emb, emb.s_min(), emb.s_max());
    if (!r.hyperbolic) {
      all = false;
      continue;
    }
    std::vector<int> si, ui;
    for (int i = 0; i < n; ++i) (d(i) < 0 ? si : ui).push_back(i);
    MatrixXd Es(n, si.size()), Eu(n, ui.size());
    for (std::size_t k = 0; k < si.size(); ++k) Es.col(k) = S.col(si[k]);
    for (std::size_t k = 0; k < ui.size(); ++k) Eu.col(k) = S.col(ui[k]);
    const auto& seg = *r.segment;
    const auto as = principal_angles(seg.Es.front(), Es);
    const auto au = principal_angles(seg.Eu.front(), Eu);
    worst_angle = std::max({worst_angle, as.back(), au.back()});
    worst_rate = std::max(worst_rate, std::abs(seg.lambda - d.cwiseAbs().minCoeff()));
  }
  report(7, all && worst_angle <= 1e-8 && worst_rate <= 1e-6,
         fmt("max subspace angle %.3g, max |lambda - min|Re eig|| %.3g over 5 transforms", worst_angle, worst_rate));
}

// 8. Segment-length threshold.
void criterion_8() {
  const double a = 2.0, lam = 1.0, alpha = kPi / 2;
  const double T = threshold_T(a, lam, alpha);
  // each printed inequality solved for T on its own
  const double rhs1 = alpha / 8.0 * std::sin(alpha / 4.0);
  const double T1 = 3.0 / lam * std::log(36.0 * a * a / rhs1);
  const double T2 = 3.0 / lam * std::log(3.0 * a * (2.0 / std::sin(alpha / 2.0) + 1.0));
  auto ineq1 = [&](double t) { return 36.0 * a * a * std::exp(-lam * t / 3.0) < rhs1; };
  auto ineq2 = [&](double t) { return 3.0 * a * (2.0 / std::sin(alpha / 2.0) + 1.0) * std::exp(-lam * t / 3.0) < 1.0; };
  const bool binding_first = T1 >= T2;
  const bool hold = ineq1(T) && ineq2(T);
  const bool fail_below = binding_first ? !ineq1(0.99 * T) : !ineq2(0.99 * T);
  report(8, std::abs(T - 22.675) <= 1e-3 && std::abs(T - std::max(T1, T2)) <= 1e-6 && hold && fail_below,
         fmt("T(2, 1, pi/2) = %.6f (re-derived %.6f); both hold at T, binding one fails at 0.99 T: ", T,
             std::max(T1, T2)) + (hold && fail_below ? "yes" : "no"));
}

// 9. Bounded solutions on the two-segment profile.
void criterion_9() {
  std::vector<Component> comps;
  for (int k = 0; k < 40; ++k) comps.push_back({static_cast<double>(k), k + 0.7});
  const TimeScaleWindow ts(0.0, 39.7, comps);
  const double tau1 = 20.0;
  const MatrixXd first = (MatrixXd(2, 2) << -1, 0, 0, 1).finished();
  const MatrixXd second = -MatrixXd::Identity(2, 2);
  const TimeScaleLinearSystem base(ts, 2, [=](double t) -> MatrixXd { return t < tau1 ? first : second; }, {}, {tau1});
  const auto emb0 = embed(base);
  const auto prof = build_profile(emb0, {emb0.map().apply(tau1)});
  const bool shape = prof.holds() && prof.dims_s == std::vector<int>{1, 2} && prof.angles.size() == 1 &&
                     std::abs(prof.angles[0] - kPi / 2) < 1e-8;

  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> U(-1.0, 1.0), W(0.2, 3.0);
  auto random_forcing = [&]() -> VectorFunction {
    const VectorXd p = VectorXd::NullaryExpr(2, [&]() { return U(rng); });
    const VectorXd q = VectorXd::NullaryExpr(2, [&]() { return U(rng); });
    const double w1 = W(rng), w2 = W(rng), ph = 3.0 * U(rng);
    const double norm = p.norm() + q.norm();
    return [=](double t) -> VectorXd { return (p * std::cos(w1 * t) + q * std::sin(w2 * t + ph)) / norm; };
  };

  double K = 0.0, worst_sup = 0.0, worst_jump = 0.0;
  bool certified = true;
  BoundedOptions bo;
  for (int k = 0; k < 20 && shape; ++k) {
    const auto f = random_forcing();
    bo.operator_bound = (k == 0);
    try {
      auto r = solve_bounded_profile(emb0.with_forcing(f), prof, bo);
      if (k == 0) K = *r.operator_bound;
      r = pull_back_and_certify(std::move(r), emb0.with_forcing(f), base.with_forcing(f), bo);
      worst_sup = std::max(worst_sup, r.K);
      worst_jump = std::max(worst_jump, r.max_jump_residual);
    } catch (const std::exception& e) {
      std::printf("  solve failed: %s\n", e.what());
      certified = false;
    }
  }

  double lin = 0.0;
  if (shape) {
    const auto rep = operator_linearity_check(emb0, prof, random_forcing(), random_forcing(), -1.7);
    lin = rep.defect / rep.scale;
  }

  const TimeScaleLinearSystem single(ts, 2, [=](double) { return first; });
  const auto f = random_forcing();
  const auto emb1 = embed(single.with_forcing(f));
  const auto prof1 = build_profile(emb1, {});
  double agree = std::numeric_limits<double>::infinity();
  if (prof1.holds()) {
    const auto g = solve_bounded_single(emb1, prof1.segment(0));
    const auto c = solve_bounded_profile(emb1, prof1);
    agree = 0.0;
    for (std::size_t k = 0; k < g.psi.size(); ++k) agree = std::max(agree, (g.psi.values[k] - c.psi.values[k]).norm());
  }

  const bool pass = shape && certified && worst_sup <= K && worst_jump <= 1e-6 && lin <= 1e-8 && agree <= 1e-7;
  report(9, pass,
         fmt("K = %.4g bounds sup|phi| = %.4g over 20 forcings; ", K, worst_sup) +
             fmt("jump residual %.3g, linearity %.3g, single vs collocation %.3g", worst_jump, lin, agree) +
             (shape ? "" : " (profile shape wrong)"));
}

// 10. Finite-time Lyapunov quotient on {2^n}.
void criterion_10() {
  const auto ts = power_scale(2.0, 0, 18);
  const TimeScaleLinearSystem sys(ts, 1, [](double) { return MatrixXd::Ones(1, 1); });
  const auto tr = solve_forced(sys, VectorXd::Ones(1), 1.0, std::ldexp(1.0, 18));
  std::vector<double> q;
  double oracle_err = 0.0;
  double log_exact = 0.0;
  for (int N = 0; N <= 18; ++N) {
    const double t = std::ldexp(1.0, N);
    if (N > 0) log_exact += std::log1p(std::ldexp(1.0, N - 1));
    const double lx = std::log(std::abs(tr.at(t)(0)));
    oracle_err = std::max(oracle_err, std::abs(lx - log_exact) / std::max(1.0, log_exact));
    q.push_back(lx / t);
  }
  bool ok = true;
  for (int N = 4; N <= 18; ++N) {
    ok = ok && q[N] > 0.0;
    if (N > 4) ok = ok && q[N] < q[N - 1];
  }
  report(10, ok && oracle_err <= 1e-10,
         fmt("quotient %.4g at N=4 down to %.4g at N=18, strictly decreasing; log error vs product %.3g", q[4], q[18],
             oracle_err));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> all = {criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                                                  criterion_6, criterion_7, criterion_8, criterion_9, criterion_10};
  for (std::size_t k = 0; k < all.size(); ++k) {
    try {
      all[k]();
    } catch (const std::exception& e) {
      report(static_cast<int>(k + 1), false, std::string("exception: ") + e.what());
    }
  }
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
