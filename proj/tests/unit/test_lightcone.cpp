#include <catch_amalgamated.hpp>

#include <cmath>

#include "lrcone/lightcone.hpp"

using namespace lrcone;
using Catch::Approx;

TEST_CASE("cancellation residuals in exact arithmetic", "[lightcone]")
{
  CHECK(verify_cancellation(3, 20, mp::Rational(5, 2)) == 0);
  const std::vector<mp::Rational> ps = {2, mp::Rational(5, 2), 3, mp::Rational(7, 2)};
  long zeros = 0, checked = 0;
  for (const auto &p : ps)
    for (int r = 1; r <= 10; ++r)
      for (long q = 2L * r + 1; q <= 100; ++q) {
        mp::Rational res = verify_cancellation(r, q, p);
        ++checked;
        if (r == 1)
          CHECK(res == -2);
        else if (r == 2)
          CHECK(res == mp::Rational(24) * p * p / mp::Rational(q * q));
        else
          zeros += res == 0;
      }
  // 2r-th difference of a quartic in r1: zero from r = 3 on
  long expected_zero = 0;
  for (int r = 3; r <= 10; ++r)
    expected_zero += 4 * (100 - 2 * r);
  CHECK(zeros == expected_zero);
  CHECK(checked > expected_zero);
  CHECK_THROWS_AS(verify_cancellation(3, 6, 2), Error);
}

TEST_CASE("edge time basics", "[lightcone]")
{
  auto r0 = eet(KernelSpec::power_law(2.5), 0, 1e-5);
  CHECK(r0.time == 0.0);
  CHECK_THROWS_AS(eet(KernelSpec::power_law(2.5), 10, 0.0), Error);
  CHECK_THROWS_AS(eet(KernelSpec::power_law(2.5), 10, 1.5), Error);
  EETOptions o;
  o.t_max = 1.0;
  auto c = eet(KernelSpec::nearest_neighbor(), 60, 1e-5, o);
  CHECK(c.censored);
  CHECK(std::isinf(c.time));
}

TEST_CASE("edge bracket is certified by an independent chain", "[lightcone][property]")
{
  for (const auto &s : {KernelSpec::power_law(2.5), KernelSpec::soft_truncated(2.5, 5, 0.5), KernelSpec::nearest_neighbor()})
    for (long q : {20L, 100L}) {
      auto r = eet(s, q, 1e-5);
      auto H = build_hopping(s, 16384);
      INFO(s.describe() << " q = " << q);
      CHECK(r.t_high - r.t_low <= 0.05);
      CHECK(propagate(H, r.t_low, q).probability < 1e-5);
      CHECK(propagate(H, r.t_high, q).probability >= 1e-5);
    }
}

TEST_CASE("series and oracle edge times agree", "[lightcone]")
{
  EETOptions o;
  o.method = EETMethod::series;
  for (long q : {6L, 12L}) {
    auto a = eet(KernelSpec::power_law(3), q, 1e-5, o);
    auto b = eet(KernelSpec::power_law(3), q, 1e-5);
    CHECK(std::fabs(a.time - b.time) <= 0.05);
  }
}

TEST_CASE("softened interactions order the edge times", "[lightcone]")
{
  std::vector<double> t;
  for (auto [eta, sigma] : std::vector<std::pair<double, double>>{{5, inf}, {5, 1.5}, {5, 0.5}, {inf, inf}})
    t.push_back(eet(KernelSpec::from_parameters(2.5, eta, sigma), 1000, 1e-5).time);
  CHECK(t[0] < t[1]);
  CHECK(t[1] < t[2]);
  CHECK(t[2] < t[3]);
}

TEST_CASE("sweep grid and determinism", "[lightcone][property]")
{
  SweepGrid g{{2.5, 3}, {2, inf}, {inf, 1}};
  auto pts = sweep_points(g);
  REQUIRE(pts.size() == 6);
  CHECK(pts[2][1] == inf);
  CHECK(pts[2][2] == inf);
  auto a = sweep(g, 60, 1e-5, {}, 1), b = sweep(g, 60, 1e-5, {}, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].time == b[i].time);
    CHECK(a[i].p == b[i].p);
    CHECK(a[i].sigma == b[i].sigma);
  }
  int seen = 0;
  sweep(g, 60, 1e-5, {}, 2, [&](const EETRecord &) { ++seen; }, [](const std::array<double, 3> &p) { return p[0] == 3; });
  CHECK(seen == 3);
}

TEST_CASE("log-log slope of synthetic data", "[lightcone]")
{
  std::vector<double> t, Q;
  for (int i = 1; i <= 21; ++i) {
    t.push_back(0.1 * i);
    Q.push_back(3.5 * std::pow(0.1 * i, 6));
  }
  auto f = slope_fit_samples(t, Q);
  CHECK(f.m == Approx(6).margin(1e-6));
  CHECK(f.residual <= 1e-10);
}

TEST_CASE("nearest-neighbour early-time exponent", "[lightcone]")
{
  for (long q : {4L, 6L, 8L}) {
    auto f = slope_fit(KernelSpec::nearest_neighbor(), q);
    INFO("q = " << q << " m = " << f.m);
    CHECK(std::fabs(f.m - 2.0 * q) <= 0.5);
  }
}

TEST_CASE("scaling and ratio checks", "[lightcone]")
{
  auto s = scaling_check(KernelSpec::power_law(2.5), 2, {20, 40, 80});
  REQUIRE(s.points.size() == 3);
  for (const auto &pt : s.points) {
    CHECK(pt.beta > 0);
    CHECK(!pt.suppressed);
  }
  // regression values, cross-checked at q = 20 against the windowed exact DP
  auto r3 = scaling_check(KernelSpec::power_law(2.5), 3, {20, 40});
  CHECK(r3.points[0].beta == Approx(5.72).epsilon(0.01));
  CHECK(r3.points[1].beta == Approx(3.03).epsilon(0.01));

  auto ratio = ratio_check(KernelSpec::power_law(3), {10, 20, 40});
  CHECK(ratio[0].log10_ratio > ratio[1].log10_ratio);
  CHECK(ratio[1].log10_ratio - ratio[2].log10_ratio >= 6);
  CHECK_THROWS_AS(ratio_check(KernelSpec::power_law(3), {11}), Error);
}

TEST_CASE("scale calibration", "[lightcone]")
{
  auto c = calibrate_scale({100, 200}, {200, 400});
  CHECK(c.scale == 0.5);
  CHECK(c.max_rel_dev == Approx(0).margin(1e-15));
  auto d = calibrate_scale({101, 199}, {100, 200});
  CHECK(d.scale == 1.0);
  CHECK(d.max_rel_dev == Approx(0.01));
}
