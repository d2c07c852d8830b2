#include "tsdyn/errors.hpp"
#include "tsdyn/linear_timescale.hpp"

#include <doctest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

using namespace tsdyn;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixFunction constant(MatrixXd M) {
  return [M](double) { return M; };
}

MatrixXd scalar(double a) { return MatrixXd::Constant(1, 1, a); }

TimeScaleWindow random_mixed(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> len(0.1, 1.5), gap(0.1, 1.0), coin(0.0, 1.0);
  std::vector<Component> comps;
  double t = lo;
  while (t < hi) {
    if (coin(rng) < 0.5) {
      comps.push_back({t, t});
    } else {
      const double e = std::min(hi, t + len(rng));
      comps.push_back({t, e});
      t = e;
    }
    t += gap(rng);
  }
  return TimeScaleWindow(lo, std::max(hi, comps.back().hi), comps);
}

// Smooth time-dependent coefficient with ||A(t)|| <= 0.5 so E + mu A stays invertible for mu <= 1.
MatrixFunction smooth_random(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  MatrixXd A0(n, n), A1(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      A0(i, j) = g(rng);
      A1(i, j) = g(rng);
    }
  A0 *= 0.35 / A0.operatorNorm();
  A1 *= 0.15 / A1.operatorNorm();
  return [A0, A1](double t) -> MatrixXd { return A0 + std::sin(t) * A1; };
}

}  // namespace

TEST_CASE("regressivity reports") {
  const auto N = uniform_scale(0.0, 10.0, 1.0);
  const auto rep = check_regressive(TimeScaleLinearSystem(N, 1, constant(scalar(-1.0))));
  CHECK_FALSE(rep.regressive);
  CHECK_FALSE(rep.uniformly_regressive);

  const auto Z = uniform_scale(-5.0, 5.0, 1.0);
  const auto half = check_regressive(TimeScaleLinearSystem(Z, 1, constant(scalar(-0.5))));
  CHECK(half.regressive);
  REQUIRE(half.positively_regressive.has_value());
  CHECK(*half.positively_regressive);
  CHECK(half.margin == doctest::Approx(0.5));

  MatrixXd R(2, 2);
  R << 0, 1, -1, 0;
  const auto rot = check_regressive(TimeScaleLinearSystem(Z, 2, constant(R)));
  CHECK(rot.regressive);
  CHECK(rot.uniformly_regressive);
  CHECK(rot.inverse_norm_sup == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK_FALSE(rot.positively_regressive.has_value());

  const auto neg = check_regressive(TimeScaleLinearSystem(Z, 1, constant(scalar(-3.0))));
  CHECK(neg.regressive);
  CHECK_FALSE(*neg.positively_regressive);
}

TEST_CASE("transition matrix examples") {
  const auto Z = uniform_scale(-2.0, 6.0, 1.0);
  const TimeScaleLinearSystem zs(Z, 1, constant(scalar(1.0)));
  CHECK(transition_matrix(zs, 3.0, 0.0)(0, 0) == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(transition_matrix(zs, 0.0, 3.0)(0, 0) == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(transition_matrix(zs, 2.0, 2.0)(0, 0) == 1.0);

  MatrixXd A(2, 2);
  A << 0.2, 0.5, -0.1, 0.3;
  const TimeScaleLinearSystem z2(Z, 2, constant(A));
  const MatrixXd E = MatrixXd::Identity(2, 2);
  const MatrixXd p = (E + A) * (E + A) * (E + A) * (E + A);
  CHECK((transition_matrix(z2, 4.0, 0.0) - p).norm() < 1e-13);

  const auto R = real_scale(0.0, 1.0);
  for (double a : {-2.0, 0.5, 1.3}) {
    const TimeScaleLinearSystem rs(R, 1, constant(scalar(a)));
    CHECK(transition_matrix(rs, 1.0, 0.0)(0, 0) == doctest::Approx(std::exp(a)).epsilon(1e-10));
  }
  const TimeScaleLinearSystem r2(R, 2, constant(A));
  CHECK((transition_matrix(r2, 0.7, 0.1) - MatrixXd((0.6 * A).exp())).norm() < 1e-9);

  const auto N = uniform_scale(0.0, 5.0, 1.0);
  const TimeScaleLinearSystem bad(N, 1, constant(scalar(-1.0)));
  CHECK(transition_matrix(bad, 3.0, 0.0)(0, 0) == 0.0);
  CHECK_THROWS_AS(transition_matrix(bad, 0.0, 3.0), RegressivityError);
  CHECK_THROWS_AS(transition_matrix(bad, 0.5, 0.0), DomainError);
}

TEST_CASE("piecewise coefficients respect breaks") {
  const auto R = real_scale(0.0, 2.0);
  const TimeScaleLinearSystem sys(R, 1, [](double t) { return scalar(t < 1.0 ? -1.0 : 2.0); }, {},
                                  {1.0});
  CHECK(transition_matrix(sys, 2.0, 0.0)(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-10));
}

TEST_CASE("generalized exponential examples") {
  const auto R = real_scale(-1.0, 3.0);
  for (double p : {-0.5, 0.3, 1.0})
    CHECK(generalized_exp(R, [p](double) { return p; }, 2.0, 0.0) ==
          doctest::Approx(std::exp(2.0 * p)).epsilon(1e-10));
  const auto Z = uniform_scale(-3.0, 6.0, 1.0);
  CHECK(generalized_exp(Z, [](double) { return 1.0; }, 3.0, 0.0) == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(generalized_exp(Z, [](double) { return -0.5; }, 4.0, 0.0) ==
        doctest::Approx(0.0625).epsilon(1e-14));
  CHECK(generalized_exp(Z, [](double) { return -3.0; }, 3.0, 0.0) == doctest::Approx(-8.0).epsilon(1e-14));
  CHECK(generalized_exp(Z, [](double) { return 1.0; }, 0.0, 3.0) == doctest::Approx(0.125).epsilon(1e-14));
  CHECK_THROWS_AS(generalized_exp(Z, [](double) { return -1.0; }, 3.0, 0.0), RegressivityError);
}

TEST_CASE("scalar transition matrix equals the generalized exponential") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ts = random_mixed(rng, 0.0, 12.0);
    auto p = [](double t) { return 0.3 * std::cos(t) - 0.1; };
    const TimeScaleLinearSystem sys(ts, 1, [p](double t) { return scalar(p(t)); });
    const auto grid = ts.sampling_grid(0.5);
    std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
    for (int k = 0; k < 5; ++k) {
      double a = grid[pick(rng)], b = grid[pick(rng)];
      const double phi = transition_matrix(sys, b, a)(0, 0);
      CHECK(phi == doctest::Approx(generalized_exp(ts, p, b, a)).epsilon(1e-9));
    }
  }
}

TEST_CASE("cocycle and inverse properties on random systems") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 1 + trial % 3;
    const auto ts = random_mixed(rng, 0.0, 10.0);
    const TimeScaleLinearSystem sys(ts, n, smooth_random(rng, n));
    const auto grid = ts.sampling_grid(0.5);
    std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
    for (int k = 0; k < 5; ++k) {
      const double t = grid[pick(rng)], tau = grid[pick(rng)], r = grid[pick(rng)];
      const MatrixXd lhs = transition_matrix(sys, t, r);
      const MatrixXd rhs = transition_matrix(sys, t, tau) * transition_matrix(sys, tau, r);
      CHECK((lhs - rhs).norm() <= 1e-8);
      const MatrixXd id = transition_matrix(sys, tau, t) * transition_matrix(sys, t, tau);
      CHECK((id - MatrixXd::Identity(n, n)).norm() <= 1e-8);
    }
  }
}

TEST_CASE("forced solutions") {
  const auto Z = uniform_scale(0.0, 10.0, 1.0);
  const TimeScaleLinearSystem zs(Z, 1, constant(scalar(-0.5)), [](double) { return VectorXd::Ones(1); });
  const auto traj = solve_forced(zs, VectorXd::Constant(1, 2.0), 0.0, 10.0);
  CHECK(traj.size() == 11);
  for (const auto& v : traj.values) CHECK(v(0) == doctest::Approx(2.0).epsilon(1e-14));

  const auto R = real_scale(0.0, 5.0);
  const TimeScaleLinearSystem rs(R, 1, constant(scalar(-1.0)), [](double) { return VectorXd::Ones(1); });
  const auto eq = solve_forced(rs, VectorXd::Ones(1), 0.0, 5.0);
  for (const auto& v : eq.values) CHECK(v(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(eq.at(5.0)(0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(eq.at(5.5), DomainError);

  // Mixed jump/flow: [0,1] with x' = 1, jump mu=1 adding mu*f at t=1, then [2,3].
  const TimeScaleWindow mixed(0.0, 3.0, {{0.0, 1.0}, {2.0, 3.0}});
  const TimeScaleLinearSystem ms(mixed, 1, constant(scalar(0.0)), [](double) { return VectorXd::Ones(1); });
  CHECK(solve_forced(ms, VectorXd::Zero(1), 0.0, 3.0).values.back()(0) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK_THROWS_AS(solve_forced(ms, VectorXd::Zero(2), 0.0, 3.0), DomainError);
}

TEST_CASE("unforced solve equals Phi x0") {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 1 + trial % 3;
    const auto ts = random_mixed(rng, 0.0, 8.0);
    const TimeScaleLinearSystem sys(ts, n, smooth_random(rng, n));
    VectorXd x0(n);
    for (int i = 0; i < n; ++i) x0(i) = g(rng);
    const double t0 = ts.components().front().lo;
    const auto traj = solve_forced(sys, x0, t0, ts.components().back().hi);
    for (std::size_t k = 0; k < traj.size(); k += 7) {
      const VectorXd ref = transition_matrix(sys, traj.times[k], t0) * x0;
      CHECK((traj.values[k] - ref).norm() <= 1e-9 * std::max(1.0, ref.norm()));
    }
  }
}

TEST_CASE("stability classifier examples") {
  const auto Z = uniform_scale(0.0, 60.0, 1.0);
  const auto us = classify_stability(TimeScaleLinearSystem(Z, 1, constant(scalar(-0.5))));
  CHECK(us.verdict == StabilityVerdict::UniformlyStable);
  CHECK(us.gamma == doctest::Approx(1.0));

  const auto un = classify_stability(TimeScaleLinearSystem(Z, 1, constant(scalar(1.0))));
  CHECK(un.verdict == StabilityVerdict::Unstable);

  MatrixXd R(2, 2);
  R << 0, 1, -1, 0;
  const auto rot = classify_stability(TimeScaleLinearSystem(real_scale(0.0, 30.0), 2, constant(R)));
  CHECK(rot.verdict == StabilityVerdict::UniformlyStable);
  CHECK(rot.gamma == doctest::Approx(1.0).epsilon(1e-8));

  // Decay then growth of equal length: solutions from the start stay bounded,
  // but Phi(t, s) for s in the middle is large.
  const auto W = real_scale(0.0, 20.0);
  const TimeScaleLinearSystem sw(W, 1, [](double t) { return scalar(t < 10.0 ? -1.0 : 1.0); }, {}, {10.0});
  CHECK(classify_stability(sw).verdict == StabilityVerdict::Stable);

  CHECK(to_string(StabilityVerdict::UniformlyStable) == "uniformly_stable");
}
