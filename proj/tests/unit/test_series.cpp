#include <catch_amalgamated.hpp>

#include <cmath>

#include "lrcone/magnon.hpp"
#include "lrcone/series.hpp"
#include "oracles/finite_diff.hpp"
#include "oracles/rational_dp.hpp"

using namespace lrcone;
using Catch::Approx;

namespace {

mp::Rational inv_fact_sq(long q)
{
  mp::Integer f = 1;
  for (long i = 2; i <= q; ++i)
    f *= i;
  return mp::Rational(1) / mp::Rational(f * f);
}

} // namespace

TEST_CASE("zeroth coefficient vanishes off the origin", "[series]")
{
  auto a = alpha_series(KernelSpec::power_law(2.5), 7, 2);
  CHECK(a.alpha[0].value.is_zero());
  CHECK(a.alpha[0].flag == IntervalFlag::exact);
  auto o = alpha_series(KernelSpec::power_law(2.5), 0, 0);
  CHECK(o.alpha[0].value.to_double() == 1.0);
}

TEST_CASE("nearest-neighbour coefficients", "[series]")
{
  auto a = alpha_series(KernelSpec::nearest_neighbor(), 3, 3);
  REQUIRE(a.alpha[1].exact);
  CHECK(*a.alpha[1].exact == 0);
  CHECK(*a.alpha[2].exact == 0);
  CHECK(abs(*a.alpha[3].exact) == mp::Rational(1, 36));
  // literal signs: alpha_q = (-1)^q / (q!)^2
  CHECK(*a.alpha[3].exact == mp::Rational(-1, 36));
  for (long q = 1; q <= 12; ++q) {
    auto s = alpha_series(KernelSpec::nearest_neighbor(), q, static_cast<int>(q));
    for (int r = 0; r < q; ++r) {
      CHECK(*s.alpha[r].exact == 0);
      CHECK(s.alpha[r].flag == IntervalFlag::exact);
    }
    CHECK(abs(*s.alpha[q].exact) == inv_fact_sq(q));
  }
}

TEST_CASE("factored coefficients match the binomial definition", "[series]")
{
  auto s = KernelSpec::tabulated({{1, "1"}, {2, "1/3"}, {3, "-1/7"}});
  auto J = [&](long d) { return *s.eval_exact(d); };
  auto rows = oracle::conv_powers(J, 40, 10);
  for (long q : {0L, 1L, 4L, 9L}) {
    auto a = alpha_series(s, q, 5);
    for (int r = 0; r <= 5; ++r) {
      INFO("q = " << q << " r = " << r);
      REQUIRE(a.alpha[r].exact);
      CHECK(*a.alpha[r].exact == oracle::alpha(rows, q, r));
    }
  }
}

TEST_CASE("truncated p = 3 problem against an exact rational oracle", "[series]")
{
  const long W = 200;
  auto J = [](long d) {
    unsigned long a = static_cast<unsigned long>(std::labs(d));
    return mpq_class(1, a * a * a);
  };
  auto rows = oracle::conv_powers(J, W, 6);
  PrecisionPolicy pol;
  pol.window = W;
  auto a = alpha_series(KernelSpec::power_law(3), 20, 3, pol);
  for (int r = 1; r <= 3; ++r) {
    INFO("r = " << r);
    REQUIRE(a.alpha[r].exact);
    CHECK(*a.alpha[r].exact == oracle::alpha(rows, 20, r));
  }
  // the window truncation moves alpha_2 only in the 7th digit
  auto inf_chain = alpha_series(KernelSpec::power_law(3), 20, 3);
  CHECK(inf_chain.alpha[2].value.to_double() == Approx(a.alpha[2].value.to_double()).epsilon(1e-6));
}

TEST_CASE("first coefficient is minus the squared coupling", "[series]")
{
  for (long q : {5L, 20L, 60L}) {
    auto a = alpha_series(KernelSpec::power_law(2.5), q, 1);
    double J = std::pow(static_cast<double>(q), -2.5);
    CHECK(a.alpha[1].value.to_double() == Approx(-J * J).epsilon(1e-14));
  }
}

TEST_CASE("coefficients are stable under doubled precision", "[series][property]")
{
  PrecisionPolicy lo, hi;
  hi.initial_digits = 2 * lo.initial_digits;
  hi.max_digits = 4 * lo.max_digits;
  auto a = alpha_series(KernelSpec::power_law(2.5), 30, 6, lo);
  hi.initial_digits = 2 * a.precision_digits;
  auto b = alpha_series(KernelSpec::power_law(2.5), 30, 6, hi);
  for (int r = 1; r <= 6; ++r)
    CHECK(b.alpha[r].value.to_double() == Approx(a.alpha[r].value.to_double()).epsilon(1e-6));
}

TEST_CASE("Q at zero time", "[series]")
{
  auto c = q_curve(KernelSpec::power_law(2.5), 4, {0.0});
  CHECK(c.samples[0].Q.to_double() == 0.0);
  auto o = q_curve(KernelSpec::power_law(2.5), 0, {0.0});
  CHECK(o.samples[0].Q.to_double() == 1.0);
}

TEST_CASE("truncation bound", "[series]")
{
  CHECK(truncation_bound(2.0, 10, 0.0) == 0.0);
  double lead = std::pow(4.0, 22) / std::tgamma(23.0);
  double b = truncation_bound(2.0, 10, 1.0);
  CHECK(lead == Approx(1.6e-8).epsilon(0.05));
  CHECK(b >= lead);
  CHECK(b <= 1.5 * lead);
  // non-increasing in R, non-decreasing in t
  double prev = inf;
  for (int R = 0; R <= 60; R += 5) {
    CHECK(truncation_bound(3.0, R, 2.0) <= prev);
    prev = truncation_bound(3.0, R, 2.0);
  }
  CHECK(truncation_bound(3.0, 20, 1.0) <= truncation_bound(3.0, 20, 2.0));
  CHECK(default_rmax(2.0, 1.0) > 0);
  CHECK(truncation_bound(2.0, default_rmax(2.0, 1.0), 1.0) < 1e-8);
}

TEST_CASE("Q is even in t", "[series][property]")
{
  auto s = KernelSpec::power_law(2.5);
  auto a = alpha_series(s, 6, 20);
  double Su = kernel_sum(s).upper();
  std::function<double(double)> Q = [&](double t) { return evaluate_q(a, QForm::unitary, t, Su).Q.to_double(); };
  CHECK(std::fabs(oracle::central_diff(Q, 0.0, 1e-4)) <= 1e-12);
  CHECK(Q(0.7) == Q(-0.7));
}

TEST_CASE("series derivative matches finite differences", "[series]")
{
  for (long q : {4L, 8L}) {
    auto s = KernelSpec::power_law(3);
    double t = q / 4.0;
    auto c = q_curve(s, q, {t - 1e-4, t, t + 1e-4});
    double fd = (c.samples[2].Q.to_double() - c.samples[0].Q.to_double()) / 2e-4;
    CHECK(c.samples[1].dQdt == Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("nearest-neighbour lower coefficients are zero intervals", "[series][property]")
{
  for (long q : {5L, 9L}) {
    PrecisionPolicy pol;
    pol.method = ConvMethod::mp_dp;
    auto a = alpha_series(KernelSpec::nearest_neighbor(), q, static_cast<int>(q), pol);
    for (int r = 1; r < q; ++r) {
      CHECK(a.alpha[r].contains_zero());
      CHECK(a.alpha[r].error.to_double() <= 1e-30);
    }
  }
}

TEST_CASE("unitary and literal forms differ by alternating signs", "[series]")
{
  auto u = q_curve(KernelSpec::power_law(2.5), 3, {0.5}, QForm::unitary, 12);
  auto l = q_curve(KernelSpec::power_law(2.5), 3, {0.5}, QForm::literal, 12);
  // odd orders flip: unitary - literal = -2 sum_{r odd} alpha_r t^{2r}
  double odd = 0;
  for (const auto &c : u.alpha.alpha)
    if (c.r % 2)
      odd += c.value.to_double() * std::pow(0.25, c.r);
  CHECK(u.samples[0].Q.to_double() - l.samples[0].Q.to_double() == Approx(-2 * odd).epsilon(1e-10));
  CHECK_THROWS_AS(parse_form("other"), Error);
}

TEST_CASE("unitary series equals the magnon probability", "[series]")
{
  for (const auto &s : {KernelSpec::power_law(2.5), KernelSpec::soft_truncated(2.5, 5, 0.5), KernelSpec::power_law(3.5)}) {
    for (long q : {4L, 10L}) {
      std::vector<double> ts;
      for (int i = 1; i <= 5; ++i)
        ts.push_back(q / 2.0 * i / 5.0);
      auto c = q_curve(s, q, ts);
      auto H = build_hopping(s, 1024);
      for (const auto &smp : c.samples) {
        double P = propagate(H, smp.t, q).probability;
        double fs = finite_size_bound(H, smp.t, q).probability_bound;
        INFO(s.describe() << " q = " << q << " t = " << smp.t);
        CHECK(std::fabs(smp.Q.to_double() - P) <= smp.error_bound + fs + 1e-15);
      }
    }
  }
}
