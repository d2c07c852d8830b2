#include "tsdyn/errors.hpp"
#include "tsdyn/timescale.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace tsdyn;

namespace {

// Brute-force Hausdorff oracle: dense samples of both sets, nearest point by scan.
double hausdorff_by_sampling(const TimeScaleWindow& a, const TimeScaleWindow& b, double step) {
  auto samples = [step](const TimeScaleWindow& ts) {
    std::vector<double> pts;
    for (const auto& c : ts.components()) {
      if (c.is_point()) {
        pts.push_back(c.lo);
        continue;
      }
      for (double t = c.lo; t < c.hi; t += step) pts.push_back(t);
      pts.push_back(c.hi);
    }
    return pts;
  };
  const auto pa = samples(a), pb = samples(b);
  auto directed = [](const std::vector<double>& x, const std::vector<double>& y) {
    double d = 0.0;
    for (double u : x) {
      double best = INFINITY;
      for (double v : y) best = std::min(best, std::abs(u - v));
      d = std::max(d, best);
    }
    return d;
  };
  return std::max(directed(pa, pb), directed(pb, pa));
}

TimeScaleWindow random_mixed(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> len(0.1, 1.5), gap(0.05, 1.0), coin(0.0, 1.0);
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

}  // namespace

TEST_CASE("construction merges touching components and rejects bad input") {
  TimeScaleWindow ts(0.0, 3.0, {{1.0, 2.0}, {0.0, 1.0 - 1e-13}, {3.0, 3.0}});
  REQUIRE(ts.size() == 2);
  CHECK(ts.components()[0].lo == 0.0);
  CHECK(ts.components()[0].hi == 2.0);
  CHECK_THROWS_AS(TimeScaleWindow(0.0, 1.0, {}), DomainError);
  CHECK_THROWS_AS(TimeScaleWindow(0.0, 1.0, {{0.5, 2.0}}), DomainError);
  CHECK_THROWS_AS(TimeScaleWindow(1.0, 1.0, {{1.0, 1.0}}), DomainError);
}

TEST_CASE("forward jump and graininess") {
  const auto Z = uniform_scale(-3.0, 3.0, 1.0);
  CHECK(sigma(Z, 1.0) == 2.0);
  CHECK(graininess(Z, 1.0) == 1.0);
  CHECK(sigma(Z, 3.0) == 3.0);  // maximal point maps to itself
  CHECK(graininess(Z, 3.0) == 0.0);

  const auto R = real_scale(0.0, 1.0);
  CHECK(sigma(R, 0.5) == 0.5);
  CHECK(graininess(R, 0.5) == 0.0);

  const TimeScaleWindow two(0.0, 3.0, {{0.0, 1.0}, {2.0, 3.0}});
  CHECK(sigma(two, 1.0) == 2.0);
  CHECK(sigma(two, 0.0) == 0.0);

  const auto P = power_scale(2.0, 0, 5);
  CHECK(sigma(P, 4.0) == 8.0);
  CHECK(graininess(P, 4.0) == 4.0);
  CHECK_FALSE(P.syndetic_hint());

  CHECK_THROWS_AS(sigma(Z, 0.5), DomainError);
  CHECK_THROWS_AS(graininess(two, 1.5), DomainError);
}

TEST_CASE("sigma is monotone and mu > 0 exactly at right ends with successors") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ts = random_mixed(rng, 0.0, 10.0);
    const auto grid = ts.sampling_grid(0.1);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k)
      CHECK(sigma(ts, grid[k]) <= sigma(ts, grid[k + 1]));
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const auto& c = ts.components()[k];
      if (!c.is_point()) CHECK(graininess(ts, 0.5 * (c.lo + c.hi)) == 0.0);
      if (k + 1 < ts.size()) CHECK(graininess(ts, c.hi) > 0.0);
      else CHECK(graininess(ts, c.hi) == 0.0);
    }
  }
}

TEST_CASE("delta integral examples") {
  const auto Z = uniform_scale(-3.0, 5.0, 1.0);
  CHECK(delta_integral(Z, [](double) { return 1.0; }, 0.0, 3.0) == doctest::Approx(3.0));
  CHECK(delta_integral(Z, [](double t) { return t; }, 0.0, 3.0) == doctest::Approx(3.0));
  const auto R = real_scale(-1.0, 2.0);
  CHECK(delta_integral(R, [](double t) { return t; }, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(delta_integral(R, [](double t) { return std::exp(t); }, 0.0, 1.0) ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-11));
  CHECK_THROWS_AS(delta_integral(Z, [](double) { return 1.0; }, 0.5, 2.0), DomainError);
  CHECK_THROWS_AS(delta_integral(Z, [](double) { return 1.0; }, 2.0, 1.0), DomainError);
}

TEST_CASE("delta integral on a mixed scale matches the hand sum") {
  // [0,1] then point 2 then [3,4]: int_0^4 t = 1/2 + 1*1 + 2*1 + 7/2.
  const TimeScaleWindow ts(0.0, 4.0, {{0.0, 1.0}, {2.0, 2.0}, {3.0, 4.0}});
  CHECK(delta_integral(ts, [](double t) { return t; }, 0.0, 4.0) == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("delta integral is additive and linear") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ts = random_mixed(rng, 0.0, 8.0);
    const auto grid = ts.sampling_grid(0.3);
    std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
    std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
    std::array<std::size_t, 3> idx{i, j, k};
    std::sort(idx.begin(), idx.end());
    const double a = grid[idx[0]], b = grid[idx[1]], c = grid[idx[2]];
    const double p = u(rng), q = u(rng);
    auto f = [p](double t) { return std::sin(p * t) + t * t; };
    auto g = [q](double t) { return std::cos(q * t); };
    const double ab = delta_integral(ts, f, a, b), bc = delta_integral(ts, f, b, c);
    CHECK(ab + bc == doctest::Approx(delta_integral(ts, f, a, c)).epsilon(1e-9));
    const double lin = delta_integral(ts, [&](double t) { return 2.0 * f(t) - 3.0 * g(t); }, a, c);
    CHECK(lin == doctest::Approx(2.0 * delta_integral(ts, f, a, c) - 3.0 * delta_integral(ts, g, a, c))
                     .epsilon(1e-9));
  }
}

TEST_CASE("hausdorff distance examples") {
  const auto Z = uniform_scale(-3.0, 3.0, 1.0);
  const auto Zs = uniform_scale(-3.0, 3.5, 1.0, 0.25);
  CHECK(hausdorff_distance(Z, Z) == 0.0);
  CHECK(hausdorff_distance(Z, Zs) == doctest::Approx(0.25));
  CHECK(hausdorff_distance(real_scale(0.0, 1.0), real_scale(0.0, 2.0)) == doctest::Approx(1.0));
}

TEST_CASE("hausdorff distance agrees with brute force and is a metric") {
  std::mt19937_64 rng(3);
  std::vector<TimeScaleWindow> scales;
  for (int i = 0; i < 12; ++i) scales.push_back(random_mixed(rng, 0.0, 6.0));
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const auto& a = scales[i];
    const auto& b = scales[(i + 1) % scales.size()];
    const auto& c = scales[(i + 5) % scales.size()];
    const double ab = hausdorff_distance(a, b);
    CHECK(ab == hausdorff_distance(b, a));
    CHECK(ab <= hausdorff_distance(a, c) + hausdorff_distance(c, b) + 1e-12);
    CHECK(std::abs(ab - hausdorff_by_sampling(a, b, 1e-3)) <= 1e-3);
  }
}

TEST_CASE("sampling grid covers isolated points and component ends") {
  const TimeScaleWindow ts(0.0, 4.0, {{0.0, 1.0}, {2.0, 2.0}, {3.0, 4.0}});
  const auto grid = ts.sampling_grid(0.3);
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  for (double must : {0.0, 1.0, 2.0, 3.0, 4.0})
    CHECK(std::find(grid.begin(), grid.end(), must) != grid.end());
  CHECK(ts.jump_points() == std::vector<double>{1.0, 2.0});
  CHECK(ts.max_graininess() == 1.0);
}

TEST_CASE("union generator") {
  const auto u = union_of({real_scale(0.0, 1.0), uniform_scale(2.0, 4.0, 1.0)});
  CHECK(u.size() == 4);
  CHECK(sigma(u, 1.0) == 2.0);
}
