#include <catch_amalgamated.hpp>

#include <cmath>

#include "lrcone/spectral.hpp"
#include "oracles/zeta.hpp"

using namespace lrcone;
using Catch::Approx;

namespace {

// 2 sum_{n<=M} J(n) cos(n th) plus a crude tail allowance
double direct_symbol(const KernelSpec &s, double th, long M)
{
  long double acc = 0;
  for (long n = M; n >= 1; --n)
    acc += s.eval_ld(n) * std::cos(static_cast<long double>(n) * th);
  return static_cast<double>(2 * acc);
}

} // namespace

TEST_CASE("symbol at zero is the total coupling", "[spectral]")
{
  for (double p : {2.5, 3.0, 3.5, 4.0}) {
    mp::PrecisionScope scope(40);
    Symbol w(KernelSpec::power_law(p), 40);
    double ref = static_cast<double>(2 * oracle::zeta_partial(p));
    INFO("p = " << p);
    CHECK(w(mp::Float(1e-30)).to_double() == Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("p = 2 symbol has a closed form", "[spectral]")
{
  mp::PrecisionScope scope(40);
  Symbol w(KernelSpec::power_law(2), 40);
  for (double th : {0.1, 0.7, 1.5, 2.9}) {
    double ref = 2 * (M_PI * M_PI / 6 - M_PI * th / 2 + th * th / 4);
    CHECK(w(mp::Float(th)).to_double() == Approx(ref).epsilon(1e-14));
  }
}

TEST_CASE("symbol matches direct cosine sums", "[spectral]")
{
  for (const auto &s : {KernelSpec::power_law(2.5), KernelSpec::power_law(3), KernelSpec::power_law(3.7),
                        KernelSpec::soft_truncated(2.5, 5, 0.5), KernelSpec::sharp_truncated(2, 9)}) {
    mp::PrecisionScope scope(40);
    Symbol w(s, 40);
    const long M = 1L << 20;
    double tail = s.finite_support() ? 0.0 : s.tail_bound(M);
    for (double th : {0.3, 1.1, 2.0, 3.1}) {
      INFO(s.describe() << " th = " << th);
      CHECK(std::fabs(w(mp::Float(th)).to_double() - direct_symbol(s, th, M)) <= tail + 1e-12);
    }
  }
}

TEST_CASE("spectral powers are independent of the worker count", "[spectral][property]")
{
  auto s = KernelSpec::power_law(2.5);
  auto a = spectral_convolutions(s, {3, 20}, 4, 30, 1);
  auto b = spectral_convolutions(s, {3, 20}, 4, 30, 3);
  REQUIRE(a.converged);
  for (std::size_t i = 0; i < 2; ++i)
    for (int k = 0; k <= 4; ++k)
      CHECK(a.value[i][k].str(40) == b.value[i][k].str(40));
}

TEST_CASE("spectral powers match nearest-neighbour counts", "[spectral]")
{
  auto v = spectral_convolutions(KernelSpec::nearest_neighbor(), {0, 2, 6}, 6, 30);
  REQUIRE(v.converged);
  CHECK(v.value[0][6].to_double() == Approx(20).epsilon(1e-25));
  CHECK(v.value[1][6].to_double() == Approx(15).epsilon(1e-25));
  CHECK(v.value[2][6].to_double() == Approx(1).epsilon(1e-25));
  CHECK(std::fabs(v.value[2][5].to_double()) <= v.error[2][5].to_double() + 1e-28);
}
