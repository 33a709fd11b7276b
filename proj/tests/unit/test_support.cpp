#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <thread>

#include "lrcone/csv.hpp"
#include "lrcone/mp.hpp"
#include "lrcone/parallel.hpp"
#include "lrcone/signed_log.hpp"

using namespace lrcone;
using Catch::Approx;

TEST_CASE("csv number formatting round-trips", "[csv]")
{
  CHECK(csv::format(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(csv::format(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(csv::format(2.5) == "2.5");
  CHECK(csv::format(1e-5) == "1e-05");
  for (double x : {0.1, 1.0 / 3, 413.359375, 1e-300, -7.25e12})
    CHECK(csv::parse_double(csv::format(x)) == x);
  CHECK(std::isinf(csv::parse_double("inf")));
  CHECK_THROWS_AS(csv::parse_double("1,5"), Error);
  CHECK(csv::split("a,,b") == std::vector<std::string>{"a", "", "b"});
}

TEST_CASE("csv writer and reader", "[csv]")
{
  csv::Writer w({"x", "y"});
  w.row({"1", "inf"});
  w.row({"2", "3.5"});
  CHECK(w.str() == "x,y\n1,inf\n2,3.5\n");
  auto path = std::filesystem::temp_directory_path() / "lrcone_csv_test.csv";
  w.write(path.string());
  auto t = csv::read(path.string());
  CHECK(t.header == std::vector<std::string>{"x", "y"});
  CHECK(t.values("y") == std::vector<std::string>{"inf", "3.5"});
  CHECK_THROWS_AS(t.values("z"), Error);
  std::filesystem::remove(path);
}

TEST_CASE("extended precision floats", "[mp]")
{
  mp::PrecisionScope scope(50);
  mp::Float a(1L), b(3L);
  mp::Float third = a / b;
  CHECK(third.str(20).find("33333333333333333") != std::string::npos);
  CHECK((third * b - a).log10_abs() < -48);
  CHECK(mp::zeta(mp::Float(2L)).to_double() == Approx(M_PI * M_PI / 6).epsilon(1e-16));
  CHECK(mp::factorial(20).to_double() == 2432902008176640000.0);
  mp::Float r(mp::Rational(1, 7));
  CHECK(r.to_double() == Approx(1.0 / 7).epsilon(1e-16));
  CHECK(mp::pi().to_double() == Approx(M_PI).epsilon(1e-16));
}

TEST_CASE("working precision is per thread", "[mp]")
{
  mp::PrecisionScope scope(100);
  int other = 0;
  std::thread t([&] { other = mp::working_digits(); });
  t.join();
  CHECK(mp::working_digits() >= 100);
  CHECK(other < 100);
}

TEST_CASE("signed logs", "[support]")
{
  auto s = SignedLog::from(-0.001L);
  CHECK(s.sign == -1);
  CHECK(s.log10_abs == Approx(-3));
  CHECK(s.value() == Approx(-0.001L));
  auto z = SignedLog::from(0.0L);
  CHECK(z.sign == 0);
  CHECK(std::isinf(z.log10_abs));
  mp::PrecisionScope scope(60);
  auto tiny = SignedLog::from(mp::pow(mp::Float(10L), -400L));
  CHECK(tiny.log10_abs == Approx(-400));
}

TEST_CASE("parallel loops cover each index once", "[support]")
{
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 7, [&](std::size_t i) { hits[i]++; });
  CHECK(std::count(hits.begin(), hits.end(), 1) == 1000);
  CHECK_THROWS(parallel_for(10, 3, [](std::size_t i) {
    if (i == 5)
      throw std::runtime_error("boom");
  }));
}
