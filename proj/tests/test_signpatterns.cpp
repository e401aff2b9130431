#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>

#include "multavg/signpatterns.hpp"

using namespace multavg;

namespace {

u64 rng_state = 0x9216d5d98979fb1bULL;
u64 rnd() { return rng_state = splitmix64(rng_state); }

}  // namespace

TEST_CASE("sign patterns round-trip their index encoding") {
  for (int m : {3, 4}) {
    for (unsigned idx = 0; idx < (1u << m); idx++) {
      auto e = SignPattern::from_index(idx, m);
      CHECK(e.m() == m);
      CHECK(e.index() == idx);
    }
  }
  SignPattern p({1, 1, -1, 1});
  CHECK(p.str() == "++-+");
  CHECK(p.product() == -1);
  CHECK(p.pair_sum() == 0);  // one minus: the pair sum telescopes to 0
  SignPattern q({1, 1, 1, 1});
  CHECK(q.product() == 1);
  CHECK(q.pair_sum() == 6);
  SignPattern r({1, -1, -1, 1});
  CHECK(r.pair_sum() == -2);
  CHECK_THROWS_AS(SignPattern({1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(SignPattern({1, 2, 1}), std::invalid_argument);
}

TEST_CASE("Legendre point counts: pinned curves and the Hasse window") {
  // y^2 = x(x-1)(x-2) over F_5 has 8 points
  auto c = ec_count(5, 2);
  CHECK(c.points == 8);
  CHECK(c.delta == -2);
  for (u64 p : {5ULL, 7ULL, 11ULL, 13ULL, 199ULL}) {
    for (u64 lam = 2; lam < p; lam++) {
      auto e = ec_count(p, lam);
      CHECK((double)std::abs(e.delta) <= 2.0 * std::sqrt((double)p));
      CHECK(e.points == (u64)((i64)p + 1 - e.delta));
    }
  }
  CHECK_THROWS_AS(ec_count(3, 2), std::domain_error);
  CHECK_THROWS_AS(ec_count(5, 1), std::domain_error);
}

TEST_CASE("the transfer lemma curve traces at the calibration primes") {
  CHECK(lemma_curve(5).delta == -2);
  CHECK(lemma_curve(7).delta == 0);   // supersingular: no bias at 7
  CHECK(lemma_curve(11).delta == 4);
  CHECK(lemma_curve(13).delta == -2);
}

TEST_CASE("the quartic residue sum equals its curve prediction") {
  for (u64 p : {5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 97ULL, 499ULL}) {
    auto b = blank_sum(p);
    CHECK(b.residual == 0);
    CHECK(b.predicted == -(lemma_curve(p).delta + 1));
  }
}

TEST_CASE("the Jacobi-sum identity vanishes at every odd prime") {
  for (u64 p : prime_table(499)) {
    if (p < 3) continue;
    if (p > 499) break;
    CHECK(jacobi_sum_check(p) == 0);
  }
}

TEST_CASE("4-progression character transfer at squarefree moduli") {
  for (u64 q : {5ULL, 7ULL, 11ULL, 13ULL, 35ULL, 55ULL}) {
    auto r = elltrans_check(q);
    CHECK(r.residual == 0.0);
    CHECK(r.vanishing_ok);
  }
  CHECK(std::abs(elltrans_check(5).xi - cplx(8.0)) <= 1e-12);
  CHECK(std::abs(elltrans_check(7).xi) <= 1e-12);
  // composite: the product of the local traces, mu(35) = +1
  CHECK(std::abs(elltrans_check(35).xi) <= 1e-12);  // delta_7 = 0 kills it
  CHECK(std::abs(elltrans_check(55).xi - cplx(1.0 * 40 * (-2) * 4)) <= 1e-12);
}

TEST_CASE("size-2 and size-3 subsystems carry no character mass") {
  CHECK(triv23_max(5) == 0.0);
  CHECK(triv23_max(7) == 0.0);
  CHECK(triv23_max(35) == 0.0);
}

TEST_CASE("bias assembles the curve and local products for the extended character") {
  auto f = named_mult_func("char-extended:5");
  auto b = bias(f, 5);
  CHECK(b.curve_product == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(b.local_product == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(b.local_tail <= 4e-3);
  CHECK(b.sane);
  CHECK(b.verified_path);
  // the pattern-level bias carries the sign of the product
  SignPattern plus({1, 1, 1, 1}), oddm({1, 1, 1, -1});
  CHECK(a_eps(f, 5, plus) == doctest::Approx(1.0 / 3).epsilon(1e-3));
  CHECK(a_eps(f, 5, oddm) == doctest::Approx(-1.0 / 3).epsilon(1e-3));
  // no bias at 7: the supersingular trace zeroes the curve product
  auto b7 = bias(named_mult_func("char-extended:7"), 7);
  CHECK(b7.curve_product == 0.0);
}

TEST_CASE("second-moment constants: exact rational parts and the msq target") {
  auto f = named_mult_func("char-extended:5");
  auto t = t_constants(f, 5);
  CHECK(t.t22_q == Rat(5, 31));
  CHECK(t.t42_q == Rat(22, 75));
  CHECK(t.t44_q == Rat(17, 93));
  CHECK_FALSE(t.supersingular);
  // odd-plus patterns: pair sum 0, so the prediction is (T44 - A^2)/256
  SignPattern oddp({-1, 1, 1, 1});
  double target = 20.0 / 71424.0;
  CHECK(std::abs(msq_prediction(f, 5, oddp) - target) <= 1e-5);
  auto t7 = t_constants(named_mult_func("char-extended:7"), 7);
  CHECK(t7.supersingular);
}

TEST_CASE("the truncated local product is independent of the two-progression shape") {
  auto f = named_mult_func("char-extended:5");
  auto chi = DirichletChar::real_primitive(5);
  CHECK(pindep_probe(f, chi, 400) <= 1e-6);
}

TEST_CASE("census partitions differences across filters and is deterministic") {
  auto lam = named_mult_func("liouville");
  auto all = census(lam, 5, 4000, 60, 3, DFilter::all);
  auto non = census(lam, 5, 4000, 60, 3, DFilter::non_multiple);
  auto mul = census(lam, 5, 4000, 60, 3, DFilter::multiple);
  CHECK(all.dlist.size() == 60);
  CHECK(non.dlist.size() + mul.dlist.size() == all.dlist.size());
  for (u64 d : non.dlist) CHECK(d % 5 != 0);
  for (u64 d : mul.dlist) CHECK(d % 5 == 0);
  // per-d counts across the 8 patterns partition the n range
  for (const auto& row : all.counts)
    CHECK(std::accumulate(row.begin(), row.end(), (u64)0) == 4000);
  auto again = census(lam, 5, 4000, 60, 3, DFilter::all);
  CHECK(again.counts == all.counts);
  auto threaded = census(lam, 5, 4000, 60, 3, DFilter::all, 0.01, 4);
  CHECK(threaded.counts == all.counts);
}

TEST_CASE("census means for liouville hover at the reference density 1/8") {
  auto lam = named_mult_func("liouville");
  auto c = census(lam, 0, 30000, 100, 3);
  REQUIRE(c.mean.size() == 8);
  for (double m : c.mean) CHECK(m == doctest::Approx(0.125).epsilon(0.02));
  REQUIRE(c.predicted.size() == 8);
  for (double p : c.predicted) CHECK(p == 0.125);
}

TEST_CASE("the 4-pattern census carries predictions and second moments") {
  auto ext = named_mult_func("char-extended:5");
  auto c = census(ext, 5, 50000, 40, 4, DFilter::all);
  REQUIRE(c.predicted.size() == 16);
  REQUIRE(c.msq_left.size() == 16);
  REQUIRE(c.msq_predicted.size() == 16);
  CHECK(c.has_tconstants);
  for (unsigned pat = 0; pat < 16; pat++) {
    auto e = SignPattern::from_index(pat, 4);
    double want = e.product() == 1 ? 1.0 / 12 : 1.0 / 24;
    CHECK(c.predicted[pat] == doctest::Approx(want).epsilon(1e-3));
  }
}

TEST_CASE("indicator counting equals the expanded product exactly") {
  auto lam = named_mult_func("liouville");
  CHECK(census_expansion_check(lam, 3000, 25, 3) == 0);
  CHECK(census_expansion_check(lam, 3000, 25, 4) == 0);
  auto ext = named_mult_func("char-extended:5");
  CHECK(census_expansion_check(ext, 2000, 20, 4) == 0);
}

TEST_CASE("census rejects functions leaving the sign alphabet") {
  auto mu2 = named_mult_func("mobius-squared");
  CHECK_THROWS_AS(census(mu2, 0, 1000, 10, 3), std::domain_error);
  auto lam = named_mult_func("liouville");
  CHECK_THROWS_AS(census(lam, 0, 10, 100, 3), std::invalid_argument);  // z > x
  // a modulus outside the prediction shapes still counts, just without targets
  auto c4 = census(lam, 4, 1000, 10, 4);
  CHECK(c4.predicted.empty());
  CHECK(c4.note.find("no prediction path") != std::string::npos);
}

TEST_CASE("the weighted lower bound holds on random bounded inputs") {
  const double pi = 3.141592653589793;
  for (int it = 0; it < 1000; it++) {
    size_t n = 8 + rnd() % 9;
    std::vector<cplx> a(n), b(n);
    std::vector<double> w(n);
    for (size_t j = 0; j < n; j++) {
      a[j] = std::polar((double)(rnd() % 1000) / 1000.0,
                        2 * pi * (double)(rnd() % 1000) / 1000.0);
      b[j] = std::polar((double)(rnd() % 1000) / 1000.0,
                        2 * pi * (double)(rnd() % 1000) / 1000.0);
      w[j] = 0.01 + (double)(rnd() % 100) / 25.0;
    }
    CHECK(basic_inequality_check(a, b, w, 1.0) == 0.0);
  }
  // aligned equal vectors meet the bound with equality, residual still 0
  std::vector<cplx> a3(3, cplx(1.0)), b3(3, cplx(1.0));
  CHECK(basic_inequality_check(a3, b3, {1.0, 1.0, 1.0}, 1.0) <= 1e-12);
  // anti-aligned unimodular vectors: lhs = -H, rhs = H, residual = 2*A^2*H
  std::vector<cplx> a = {1.0, 1.0}, b = {-1.0, -1.0};
  CHECK(basic_inequality_check(a, b, {1.0, 1.0}, 1.0) == doctest::Approx(4.0));
  // entries past the norm bound are rejected, not clamped
  CHECK_THROWS_AS(basic_inequality_check({cplx(2.0)}, {cplx(0.5)}, {1.0}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("logarithmic decomposition: trivial function saturates, liouville decorrelates") {
  auto one = named_mult_func("one");
  auto r1 = logdens_decomposition(one, 1, 50000);
  CHECK(r1.c4 == doctest::Approx(1.0).epsilon(1e-9));
  for (double pc : r1.pair_corr) CHECK(pc == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r1.bound == doctest::Approx(0.0).epsilon(1e-9));

  auto lam = named_mult_func("liouville");
  auto rl = logdens_decomposition(lam, 1, 100000);
  for (double pc : rl.pair_corr) CHECK(std::abs(pc) <= 0.05);
  CHECK(std::abs(rl.c4) <= 0.1);
  CHECK(rl.bound >= 0.1);
  CHECK(rl.threshold_ok);
}
