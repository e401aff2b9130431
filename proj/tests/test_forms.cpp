#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "multavg/forms.hpp"

using namespace multavg;

TEST_CASE("parse_system reads the progression grammar") {
  auto sys = parse_system("n; n+d; n+2d");
  CHECK(sys.k() == 3);
  CHECK(sys.l == 2);
  REQUIRE(sys.vars.size() == 2);
  CHECK(sys.vars[0] == "n");
  CHECK(sys.vars[1] == "d");
  CHECK(sys.forms[0].coef == std::vector<i64>{1, 0});
  CHECK(sys.forms[2].coef == std::vector<i64>{1, 2});
  CHECK(sys.forms[2].cst == 0);
}

TEST_CASE("parse_system handles coefficients, stars, constants and new variables") {
  auto sys = parse_system("2*n + 3d - 1; m");
  CHECK(sys.k() == 2);
  CHECK(sys.l == 3);  // n, d, m in first-appearance order
  CHECK(sys.forms[0].coef == std::vector<i64>{2, 3, 0});
  CHECK(sys.forms[0].cst == -1);
  CHECK(sys.forms[1].coef == std::vector<i64>{0, 0, 1});
  // round trip through the printer
  CHECK(parse_system(sys.str()).str() == sys.str());
}

TEST_CASE("parse_system rejects malformed input") {
  CHECK_THROWS_AS(parse_system(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_system("n;;d"), std::invalid_argument);
  CHECK_THROWS_AS(parse_system("n + "), std::invalid_argument);
  CHECK_THROWS_AS(parse_system("n +* d"), std::invalid_argument);  // stray star
  CHECK_THROWS_AS(parse_system("2 + 3"), std::invalid_argument);   // no variable anywhere
}

TEST_CASE("validation distinguishes primitive, parallel and degenerate systems") {
  auto good = validate_system(parse_system("n; n+d; n+2d"));
  CHECK(good.ok);
  CHECK(good.all_primitive);
  CHECK(good.pairwise_independent);
  CHECK_FALSE(good.has_degenerate);

  auto parallel = validate_system(parse_system("n+d; 2n+2d"));
  CHECK_FALSE(parallel.pairwise_independent);
  CHECK_FALSE(parallel.all_primitive);  // 2n+2d is imprimitive

  auto degen = validate_system(parse_system("n; 5"));
  CHECK(degen.has_degenerate);
  CHECK_FALSE(degen.ok);
}

TEST_CASE("system height scans homogeneous and constant coefficients") {
  CHECK(system_height(parse_system("n; n+d")) == 1);
  CHECK(system_height(parse_system("2n+3d; n-7")) == 7);
  CHECK(system_height(parse_system("n")) == 1);
}

TEST_CASE("Cauchy-Schwarz complexity of the canned families") {
  CHECK(cs_complexity(parse_system("n")) == 0);
  CHECK(cs_complexity(parse_system("n; n+d")) == 0);
  CHECK(cs_complexity(ap_system({0, 1, 2})) == 1);
  CHECK(cs_complexity(ap_system({0, 1, 2, 3})) == 2);
  CHECK(cs_complexity(gowers_system(2).system) == 1);
}

TEST_CASE("gowers_system vertices carry binary-digit conjugation weights") {
  auto g = gowers_system(2);
  REQUIRE(g.system.k() == 4);
  CHECK(g.system.l == 3);
  CHECK(g.conj_weight == std::vector<unsigned>{0, 1, 1, 2});
  // vertex 3 = n3 + n1 + n2
  std::vector<i64> pt = {2, 5, 11};
  CHECK(g.system.forms[3].eval(pt) == 18);
  CHECK(g.system.forms[0].eval(pt) == 11);
  auto g3 = gowers_system(3);
  CHECK(g3.system.k() == 8);
  CHECK(g3.conj_weight[7] == 3);
  CHECK_THROWS_AS(gowers_system(1), std::invalid_argument);
  CHECK_THROWS_AS(gowers_system(6), std::invalid_argument);
}

TEST_CASE("progression builders share the expected shape") {
  auto ap = ap_system({0, 1, 3});
  CHECK(ap.k() == 3);
  CHECK(ap.l == 2);
  CHECK(ap.forms[2].coef == std::vector<i64>{1, 3});
  auto ap2 = ap_system2({0, 1}, {0, 2});
  CHECK(ap2.k() == 4);
  CHECK(ap2.l == 3);  // n, n', d
  // forms from T act on the second variable
  std::vector<i64> pt = {10, 100, 7};
  CHECK(ap2.forms[0].eval(pt) == 10);
  CHECK(ap2.forms[1].eval(pt) == 17);
  CHECK(ap2.forms[2].eval(pt) == 100);
  CHECK(ap2.forms[3].eval(pt) == 114);
}

TEST_CASE("box geometry: extremes, volume, appropriateness") {
  auto box = BoxSpec{{100.0, 10.0}};
  CHECK(box.l() == 2);
  CHECK(box.x_minus() == 10.0);
  CHECK(box.x_plus() == 100.0);
  CHECK(box.volume() == 1000.0);
  auto sq = BoxSpec::square(2000, 2);
  CHECK(sq.x_minus() == 2000.0);
  // the criterion-scale square box is (2, 2)-appropriate, a tiny one is not
  CHECK(sq.appropriate(2, 2.0));
  CHECK_FALSE(BoxSpec::square(10, 2).appropriate(2, 2.0));
}

TEST_CASE("form_range_max sizes the sieve and rejects sign changes") {
  auto sys = ap_system({0, 1, 2});
  CHECK(form_range_max(sys, BoxSpec::square(100, 2)) == 300);
  auto neg = parse_system("n - 5d");
  CHECK_THROWS_AS(form_range_max(neg, BoxSpec::square(100, 2)), std::domain_error);
  auto wide = parse_system("1000000000000*n");
  CHECK_THROWS_AS(form_range_max(wide, BoxSpec::square(1e8, 1)), std::overflow_error);
}

TEST_CASE("affine form evaluation guards 64-bit overflow") {
  AffineForm f{{INT64_MAX / 2, INT64_MAX / 2}, 10};
  CHECK_THROWS_AS(f.eval({3, 3}), std::overflow_error);
}
