#include <catch2/catch_amalgamated.hpp>

#include "ctxroute/errors.hpp"
#include "ctxroute/rational.hpp"

using namespace ctxroute;

TEST_CASE("Ratio::of reduces to lowest terms", "[rational]") {
  auto r = Ratio::of(6, 8);
  CHECK(r.num == 3);
  CHECK(r.den == 4);
  auto z = Ratio::of(0, 5);
  CHECK(z.num == 0);
  CHECK(z.den == 1);
  auto p = Ratio::of(35, 122);
  CHECK(p.num == 35);
  CHECK(p.den == 122);
}

TEST_CASE("Ratio::of rejects invalid operands", "[rational]") {
  CHECK_THROWS_AS(Ratio::of(1, 0), DomainError);
  CHECK_THROWS_AS(Ratio::of(1, -3), DomainError);
  CHECK_THROWS_AS(Ratio::of(-1, 2), DomainError);
}

TEST_CASE("Ratio comparisons are exact", "[rational]") {
  CHECK(Ratio::of(1, 3) < Ratio::of(2, 5));
  CHECK(Ratio::of(2, 4) == Ratio::of(1, 2));
  CHECK(Ratio::of(2, 3) > Ratio::of(35, 54));
  CHECK_FALSE(Ratio::of(7, 9) < Ratio::of(7, 9));
}

TEST_CASE("Ratio multiplication cancels exactly", "[rational]") {
  // search efficiency times terminal precision equals the pass rate.
  auto eta = Ratio::of(91, 122);
  auto rho = Ratio::of(43, 91);
  auto pass = eta * rho;
  CHECK(pass == Ratio::of(43, 122));
  // cross-gcd keeps intermediates small even near the int64 edge.
  auto big = Ratio::of(3037000499LL, 3037000500LL) * Ratio::of(3037000500LL, 3037000499LL);
  CHECK(big == Ratio::of(1, 1));
}

TEST_CASE("permille rounding is integer half-up", "[rational]") {
  CHECK(Ratio::of(1, 2).permille_rounded() == 500);
  CHECK(Ratio::of(1, 3).permille_rounded() == 333);
  CHECK(Ratio::of(2, 3).permille_rounded() == 667);
  CHECK(Ratio::of(1, 8).permille_rounded() == 125);
  // exact halves round up: 0.5 permille and 1.5 permille.
  CHECK(Ratio::of(1, 2000).permille_rounded() == 1);
  CHECK(Ratio::of(3, 2000).permille_rounded() == 2);
  CHECK(Ratio::of(0, 7).permille_rounded() == 0);
  CHECK(Ratio::of(5, 5).permille_rounded() == 1000);
}

TEST_CASE("percent_1dp renders one decimal", "[rational]") {
  CHECK(Ratio::of(35, 122).percent_1dp() == "28.7");
  CHECK(Ratio::of(1, 1).percent_1dp() == "100.0");
  CHECK(Ratio::of(0, 3).percent_1dp() == "0.0");
  CHECK(Ratio::of(68, 73).percent_1dp() == "93.2");
  CHECK(Ratio::of(1, 2000).percent_1dp() == "0.1");
}

TEST_CASE("to_double stays within one ulp for small ratios", "[rational]") {
  CHECK(Ratio::of(1, 4).to_double() == 0.25);
  CHECK(Ratio::of(3, 4).to_double() == 0.75);
  CHECK_THAT(Ratio::of(1, 3).to_double(), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));
}
