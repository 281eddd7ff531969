#include <doctest.h>

#include "dvp/error.hpp"
#include "dvp/scale.hpp"

using namespace dvp;

TEST_CASE("scale factors are stored in lowest terms") {
  const ScaleFactor s(6, 4);
  CHECK(s.num() == 3);
  CHECK(s.den() == 2);
  CHECK(s == ScaleFactor::parse("3/2"));
  CHECK(ScaleFactor::parse("2") == ScaleFactor(4, 2));
  CHECK(ScaleFactor::parse("1").is_native());
  CHECK(ScaleFactor(4, 1).is_integer());
  CHECK_FALSE(ScaleFactor(5, 4).is_integer());
  CHECK(ScaleFactor(5, 2).to_string() == "5/2");
  CHECK(ScaleFactor(6, 1).to_string() == "6");
}

TEST_CASE("invalid scale factors are rejected") {
  CHECK_THROWS_AS(ScaleFactor(0, 1), InvalidArgument);
  CHECK_THROWS_AS(ScaleFactor(3, -2), InvalidArgument);
  CHECK_THROWS_AS(ScaleFactor::parse("abc"), InvalidArgument);
  CHECK_THROWS_AS(ScaleFactor::parse("3/"), InvalidArgument);
  CHECK_THROWS_AS(ScaleFactor::parse(""), InvalidArgument);
}

TEST_CASE("ordering follows the rational value") {
  CHECK(ScaleFactor(5, 4) < ScaleFactor(4, 3));
  CHECK(ScaleFactor(4, 3) < ScaleFactor(3, 2));
  CHECK(ScaleFactor(5, 2) < ScaleFactor(3, 1));
  CHECK(ScaleFactor(2, 1).ratio_to(ScaleFactor(4, 3)) == ScaleFactor(3, 2));
  CHECK(ScaleFactor(5, 2).ratio_to(ScaleFactor(5, 4)) == ScaleFactor(2, 1));
}

TEST_CASE("output dimensions round half away from zero") {
  CHECK(ScaleFactor(3, 2).output_dim(1920) == 1280);
  CHECK(ScaleFactor(3, 2).output_dim(1080) == 720);
  CHECK(ScaleFactor(6, 1).output_dim(1920) == 320);
  CHECK(ScaleFactor(6, 1).output_dim(1080) == 180);
  CHECK(ScaleFactor(2, 1).output_dim(97) == 49);  // 48.5
  CHECK(ScaleFactor(4, 3).output_dim(121) == 91); // 90.75
  CHECK(ScaleFactor(6, 1).output_dim(2) == 1);    // never below one
  CHECK(ScaleFactor(5, 4).output_dim(1080) == 864);
}

TEST_CASE("canonical set and scale lists") {
  const auto& c = canonical_scales();
  REQUIRE(c.size() == 8);
  CHECK(c.front() == ScaleFactor(5, 4));
  CHECK(c.back() == ScaleFactor(6, 1));
  CHECK(std::is_sorted(c.begin(), c.end()));
  CHECK(all_modes().size() == 9);
  CHECK(all_modes().front().is_native());
  CHECK(is_canonical(ScaleFactor(5, 2)));
  CHECK_FALSE(is_canonical(ScaleFactor(7, 2)));
  CHECK_FALSE(is_canonical(ScaleFactor(1, 1)));

  CHECK(parse_scale_list("all") == all_modes());
  const auto l = parse_scale_list("2, 3/2,1,2");
  REQUIRE(l.size() == 3);
  CHECK(l[0].is_native());
  CHECK(l[1] == ScaleFactor(3, 2));
  CHECK(l[2] == ScaleFactor(2, 1));
  CHECK_THROWS_AS(parse_scale_list("7/2"), InvalidArgument);
  CHECK_THROWS_AS(parse_scale_list(" , "), InvalidArgument);
}
