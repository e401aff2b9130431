#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>
#include <set>

#include "multavg/multfunc.hpp"

using namespace multavg;

namespace {

u64 rng_state = 0xbe5466cf34e90c6cULL;
u64 rnd() { return rng_state = splitmix64(rng_state); }

bool close(cplx a, cplx b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

}  // namespace

TEST_CASE("liouville flips under doubling and is completely multiplicative") {
  auto lam = named_mult_func("liouville");
  auto v = lam.bulk_eval(10000);
  for (u64 n = 1; n <= 5000; n++) CHECK(close(v[2 * n], -v[n]));
  for (int it = 0; it < 200; it++) {
    u64 a = 1 + rnd() % 99, b = 1 + rnd() % 99;
    CHECK(close(lam.eval(a * b), lam.eval(a) * lam.eval(b)));
  }
}

TEST_CASE("mobius-squared matches squarefree detection") {
  auto mu2 = named_mult_func("mobius-squared");
  for (u64 n = 1; n <= 2000; n++) {
    bool sf = true;
    for (auto& pk : factorize(n)) sf = sf && pk.k == 1;
    CHECK(close(mu2.eval(n), sf ? 1.0 : 0.0));
  }
  CHECK_FALSE(mu2.completely_multiplicative());
}

TEST_CASE("bulk_eval agrees with pointwise eval") {
  for (const char* name : {"one", "liouville", "mobius-squared", "char-extended:5"}) {
    auto f = named_mult_func(name);
    auto v = f.bulk_eval(500);
    REQUIRE(v.size() == 501);
    for (u64 n = 1; n <= 500; n++) CHECK(close(v[n], f.eval(n)));
  }
}

TEST_CASE("localization agrees on p-powers and is 1 elsewhere") {
  auto lam = named_mult_func("liouville");
  auto l3 = lam.localize(3);
  CHECK(close(l3.eval(9), 1.0));
  CHECK(close(l3.eval(27), -1.0));
  CHECK(close(l3.eval(14), 1.0));
  CHECK(close(l3.eval(18), 1.0));  // 2 * 3^2: the 2-part is replaced by 1
  CHECK(close(l3.eval(6), -1.0));
  CHECK_THROWS_AS(lam.localize(6), std::domain_error);
}

TEST_CASE("the registry rejects unknown names with the expected message") {
  bool threw = false;
  try {
    named_mult_func("nosuch");
  } catch (const std::invalid_argument& e) {
    threw = true;
    CHECK(std::string(e.what()).find("unknown function") != std::string::npos);
  }
  CHECK(threw);
  CHECK_THROWS_AS(named_mult_func("char-real:abc"), std::invalid_argument);
  CHECK_THROWS_AS(named_mult_func("char-real:8"), std::domain_error);  // even modulus
}

TEST_CASE("an oracle breaking the 1-bound is rejected at evaluation") {
  MultFunc bad("bad", true, [](u64, unsigned) -> cplx { return 2.0; });
  CHECK_THROWS_AS(bad.eval(2), std::domain_error);
  MultFunc edge("edge", true, [](u64, unsigned) -> cplx { return 1.0; });
  CHECK(close(edge.eval(64), 1.0));
}

TEST_CASE("real primitive characters match the quadratic symbol") {
  for (u64 q : {5ULL, 7ULL, 11ULL, 13ULL, 15ULL, 35ULL, 55ULL}) {
    auto chi = DirichletChar::real_primitive(q);
    CHECK(chi.modulus() == q);
    CHECK(chi.real());
    CHECK(chi.primitive());
    for (u64 n = 0; n <= 3 * q; n++) {
      cplx want = (std::gcd(n, q) != 1) ? 0.0 : (double)kronecker((i64)n, (i64)q);
      CHECK(close(chi.value(n), want));
    }
  }
}

TEST_CASE("character groups have the right size and orthogonality relations") {
  for (u64 q : {5ULL, 8ULL, 12ULL, 35ULL}) {
    auto group = DirichletChar::group(q);
    u64 phi = 0;
    for (u64 n = 1; n <= q; n++) phi += std::gcd(n, q) == 1;
    REQUIRE(group.size() == phi);
    for (const auto& chi : group) {
      // multiplicative on units, zero off units
      for (u64 a = 1; a <= q; a++)
        for (u64 b = 1; b <= q; b++) CHECK(close(chi.value(a * b), chi.value(a) * chi.value(b)));
      // column orthogonality
      cplx s = 0;
      for (u64 n = 1; n <= q; n++) s += chi.value(n);
      bool trivial = true;
      for (u64 n = 1; n <= q && trivial; n++)
        if (std::gcd(n, q) == 1) trivial = close(chi.value(n), 1.0);
      CHECK(close(s, trivial ? (double)phi : 0.0, 1e-9));
    }
    // row orthogonality at a fixed unit
    for (u64 n = 1; n <= q; n++) {
      if (std::gcd(n, q) != 1) continue;
      cplx s = 0;
      for (const auto& chi : group) s += chi.value(n);
      CHECK(close(s, (n % q == 1) ? (double)phi : 0.0, 1e-9));
    }
  }
}

TEST_CASE("the table backend contains the quadratic-symbol character") {
  for (u64 q : {5ULL, 15ULL, 35ULL}) {
    auto real = DirichletChar::real_primitive(q);
    bool found = false;
    for (const auto& chi : DirichletChar::group(q)) {
      bool same = true;
      for (u64 n = 0; n <= 2 * q && same; n++) same = close(chi.value(n), real.value(n));
      found = found || same;
    }
    CHECK(found);
  }
}

TEST_CASE("conductors and parity behave on small moduli") {
  auto g8 = DirichletChar::group(8);
  std::multiset<u64> conds;
  for (auto& chi : g8) conds.insert(chi.conductor());
  CHECK(conds == std::multiset<u64>{1, 4, 8, 8});
  for (auto& chi : g8) {
    CHECK((chi.parity() == 1 || chi.parity() == -1));
    CHECK(close(chi.value_signed(-3), (double)chi.parity() * chi.value(3)));
  }
}

TEST_CASE("component values multiply to the full value") {
  auto chi = DirichletChar::real_primitive(35);
  for (u64 n = 1; n <= 70; n++) {
    if (std::gcd(n, (u64)35) != 1) continue;
    CHECK(close(chi.component_value(5, n) * chi.component_value(7, n), chi.value(n)));
  }
}

TEST_CASE("extended-by-one characters are unimodular and completely multiplicative") {
  auto f = named_mult_func("char-extended:5");
  CHECK(close(f.eval(5), 1.0));
  CHECK(close(f.eval(10), -1.0));   // chi_5(2) = -1, extension gives f(5) = 1
  CHECK(close(f.eval(25), 1.0));
  for (u64 n = 1; n <= 400; n++) CHECK(std::abs(f.eval(n)) == doctest::Approx(1.0));
  for (int it = 0; it < 100; it++) {
    u64 a = 1 + rnd() % 60, b = 1 + rnd() % 60;
    CHECK(close(f.eval(a * b), f.eval(a) * f.eval(b)));
  }
}

TEST_CASE("twisted functions compose f, the conjugate character and the archimedean twist") {
  auto lam = named_mult_func("liouville");
  auto chi = DirichletChar::real_primitive(5);
  TwistedFunc tw{lam, chi, 0.7};
  auto F = tw.as_mult_func();
  for (u64 n : {2ULL, 3ULL, 7ULL, 11ULL, 49ULL}) {  // coprime to 5
    cplx want = lam.eval(n) * std::conj(chi.value(n)) *
                std::exp(cplx(0, -0.7 * std::log((double)n)));
    CHECK(close(F.eval(n), want, 1e-9));
  }
  // extension by 1 at the character's primes, per prime power
  CHECK(close(F.eval(5), 1.0));
  CHECK(close(F.eval(25), 1.0));
}

TEST_CASE("pretentious distance: identity, symmetry, triangle inequality") {
  auto one = named_mult_func("one");
  auto lam = named_mult_func("liouville");
  auto ext = named_mult_func("char-extended:5");
  CHECK(distance(lam, lam, 1, 1000) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(distance(lam, one, 1, 1000) == doctest::Approx(distance(one, lam, 1, 1000)));
  double ab = distance(one, lam, 1, 500), bc = distance(lam, ext, 1, 500),
         ac = distance(one, ext, 1, 500);
  CHECK(ac <= ab + bc + 1e-12);
  // pinned value for the Liouville-vs-1 distance
  CHECK(distance(lam, one, 1, 1000) == doctest::Approx(2.09670223312).epsilon(1e-9));
  CHECK(distance_star(lam, one, 1, 1000) == doctest::Approx(2.19825542986).epsilon(1e-9));
  CHECK(distance_star(lam, one, 1, 1000) >= distance(lam, one, 1, 1000));
  CHECK_THROWS_AS(distance(lam, one, 10, 5), std::domain_error);
}

TEST_CASE("min_distance finds the nearby character for a twisted input") {
  auto ext = named_mult_func("char-extended:5");
  auto r5 = min_distance(ext, 2000, 10);
  CHECK(r5.q == 5);
  CHECK(std::abs(r5.t) <= 0.06);
  CHECK(r5.value <= 0.21);  // the only surviving term is p = 5 itself: 1/5
  // liouville stays bounded away from every small twist; the infimum sits at
  // the trivial character with a large |t| partially matching (-1)^Omega
  auto rl = min_distance(named_mult_func("liouville"), 1000, 10);
  CHECK(rl.value >= 0.5);
  CHECK(rl.value > 2.0 * r5.value);  // pretentious input sits much closer
}

TEST_CASE("additive moments: the trivial function has none, liouville's are pinned") {
  auto m1 = additive_moments(named_mult_func("one"), 1e4);
  CHECK(std::abs(m1.mu) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m1.sigma2 == doctest::Approx(0.0).epsilon(1e-12));
  // x = 10: prime powers 2,3,4,5,7,8,9 with h = f - 1 supported on odd exponents
  auto ml = additive_moments(named_mult_func("liouville"), 10);
  double want = -2.0 * (0.5 * 0.5 + (1.0 / 3) * (2.0 / 3) + 0.2 * 0.8 + (1.0 / 7) * (6.0 / 7) +
                        0.125 * 0.5);
  CHECK(ml.mu.real() == doctest::Approx(want).epsilon(1e-12));
  CHECK(ml.mu.imag() == doctest::Approx(0.0).epsilon(1e-12));
  double want2 = 4.0 * (0.5 * 0.5 + (1.0 / 3) * (2.0 / 3) + 0.2 * 0.8 + (1.0 / 7) * (6.0 / 7) +
                        0.125 * 0.5);
  CHECK(ml.sigma2 == doctest::Approx(want2).epsilon(1e-12));
}
