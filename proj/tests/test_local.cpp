#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "multavg/local.hpp"

using namespace multavg;

namespace {

u64 rng_state = 0xc0ac29b7c97c50ddULL;
u64 rnd() { return rng_state = splitmix64(rng_state); }

const std::vector<MultFunc>& pool() {
  static std::vector<MultFunc> fs = {
      named_mult_func("one"), named_mult_func("liouville"), named_mult_func("mobius-squared"),
      named_mult_func("char-extended:5"), named_mult_func("char-extended:7")};
  return fs;
}

FormSystem random_small_system() {
  switch (rnd() % 4) {
    case 0: return parse_system("n");
    case 1: return parse_system("n; n+d");
    case 2: return parse_system("n; 2n+d");
    default: return ap_system({0, 1, 2});
  }
}

}  // namespace

TEST_CASE("omega_L counts roots of a primitive form") {
  for (u64 p : {2ULL, 3ULL, 5ULL}) {
    for (unsigned k = 1; k <= 4; k++) {
      AffineForm f{{1, 2}, 3};
      CHECK(omega_L(f, 2, p, k) == pow_checked(p, k));  // p^{k(l-1)}
      AffineForm g{{1}, 0};
      CHECK(omega_L(g, 1, p, k) == 1);
    }
  }
  AffineForm imprimitive{{2, 4}, 0};
  CHECK_THROWS_AS(omega_L(imprimitive, 2, 2, 1), std::domain_error);
}

TEST_CASE("local averages have closed forms for the classical functions") {
  auto one = named_mult_func("one");
  auto lam = named_mult_func("liouville");
  auto mu2 = named_mult_func("mobius-squared");
  auto sysn = parse_system("n");
  for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 23ULL, 47ULL}) {
    auto r1 = local_average({one}, sysn, p);
    CHECK(std::abs(r1.value - cplx(1.0)) <= 1e-10);
    auto rl = local_average({lam}, sysn, p);
    double want = (double)(p - 1) / (double)(p + 1);
    CHECK(std::abs(rl.value - cplx(want)) <= 1e-9);
    auto rm = local_average({mu2}, sysn, p);
    CHECK(std::abs(rm.value - cplx(1.0 - 1.0 / ((double)p * p))) <= 1e-9);
  }
  // extended character: trivial at its own prime, alternating elsewhere
  auto ext = named_mult_func("char-extended:5");
  CHECK(std::abs(local_average({ext}, sysn, 5).value - cplx(1.0)) <= 1e-9);
  CHECK(std::abs(local_average({ext}, sysn, 2).value - cplx(1.0 / 3)) <= 1e-9);
}

TEST_CASE("the two local-average algorithms agree on random instances") {
  u64 primes[] = {2, 3, 5, 7, 11, 13, 17, 23, 31, 41, 47};
  for (int it = 0; it < 25; it++) {
    const auto& f = pool()[rnd() % pool().size()];
    auto sys = random_small_system();
    u64 p = primes[rnd() % 11];
    std::vector<MultFunc> fs(sys.k(), f);
    auto r = local_average(fs, sys, p);
    REQUIRE(r.dual_ran);
    CHECK(r.converged);
    CHECK(std::abs(r.value - r.value_b) <= 1e-9);
    CHECK(r.bracket <= 1e-9);
  }
}

TEST_CASE("euler products collapse for the trivial function and factor for liouville") {
  auto one = named_mult_func("one");
  auto lam = named_mult_func("liouville");
  CHECK(std::abs(euler_factor(one, 2, 1000) - cplx(1.0)) <= 1e-12);
  // primes in (2, 10]: 3, 5, 7
  double want = (2.0 / 4) * (4.0 / 6) * (6.0 / 8);
  CHECK(std::abs(euler_factor(lam, 2, 10) - cplx(want)) <= 1e-9);
  CHECK_THROWS_AS(euler_factor(one, 1, 10), std::invalid_argument);
}

TEST_CASE("char_factor: orthogonality kills small progression subsystems") {
  auto chi5 = DirichletChar::real_primitive(5);
  std::vector<DirichletChar> chi3(3, chi5), chi4(4, chi5), chi2(2, chi5);
  CHECK(std::abs(char_factor({1, 1, 1}, chi3, ap_system({0, 1, 2}))) <= 1e-12);
  CHECK(std::abs(char_factor({1, 1}, chi2, parse_system("n; n+d"))) <= 1e-12);
  // the 4-progression value is the transfer constant mu(5) phi(5) delta_5 = 8
  CHECK(std::abs(char_factor({1, 1, 1, 1}, chi4, ap_system({0, 1, 2, 3})) - cplx(8.0)) <= 1e-12);
}

TEST_CASE("char_factor enumeration and factored paths agree") {
  auto chi5 = DirichletChar::real_primitive(5);
  auto chi7 = DirichletChar::real_primitive(7);
  auto triv = DirichletChar::trivial();
  auto sys = ap_system({0, 1, 2});
  for (auto& a : std::vector<std::vector<u64>>{{1, 1, 1}, {5, 1, 1}, {1, 5, 25}}) {
    std::vector<DirichletChar> chis = {chi5, chi5, chi5};
    cplx d = char_factor_enumerate(a, chis, sys);
    cplx f = char_factor(a, chis, sys, /*enum_cap=*/1);  // force the factored path
    CHECK(std::abs(d - f) <= 1e-12);
  }
  std::vector<DirichletChar> mixed = {chi5, chi7, triv};
  cplx d = char_factor_enumerate({1, 7, 1}, mixed, sys);
  cplx f = char_factor({1, 7, 1}, mixed, sys, 1);
  CHECK(std::abs(d - f) <= 1e-12);
}

TEST_CASE("arch integral is 1 without twists and tracks the scale phase") {
  auto sys = ap_system({0, 1, 2});
  auto box = BoxSpec::square(1000, 2);
  auto r0 = arch_integral(box, sys, {0, 0, 0});
  CHECK(std::abs(r0.value - cplx(1.0)) <= 1e-10);
  CHECK(r0.equal_scales);
  CHECK(std::abs(r0.scale_phase - cplx(1.0)) <= 1e-12);

  std::vector<double> t = {0.3, -0.1, 0.05};
  auto r = arch_integral(box, sys, t);
  CHECK(r.converged);
  CHECK(std::abs(r.value) <= 1.0 + 1e-9);
  double T = 0.3 - 0.1 + 0.05;
  cplx want_phase = std::exp(cplx(0, T * std::log(1000.0)));
  CHECK(std::abs(r.scale_phase - want_phase) <= 1e-9);
  CHECK(std::abs(r.value - r.scale_phase * r.homogeneous) <= 1e-9);
}

TEST_CASE("divisor densities: pinned exact values") {
  CHECK(density_R({5, 5, 5, 5}, ap_system({0, 1, 2, 3})) == Rat(1, 25));
  CHECK(density_R({2, 3}, parse_system("n; n+d")) == Rat(1, 6));
  CHECK(density_R({1, 1, 1}, ap_system({0, 1, 2})) == Rat(1));
  // q | d degeneracy: both forms divisible forces the difference divisible
  CHECK(density_R({5, 5}, parse_system("n; n+d")) == Rat(1, 25));
}

TEST_CASE("divisor densities multiply over coprime moduli tuples") {
  for (int it = 0; it < 40; it++) {
    auto sys = random_small_system();
    int k = sys.k();
    std::vector<u64> u(k), v(k), uv(k);
    u64 uc[] = {1, 2, 4, 8}, vc[] = {1, 3, 5, 9, 7};
    for (int j = 0; j < k; j++) {
      u[j] = uc[rnd() % 4];
      v[j] = vc[rnd() % 5];
      uv[j] = u[j] * v[j];
    }
    CHECK(density_R(uv, sys) == density_R(u, sys) * density_R(v, sys));
  }
}

TEST_CASE("density_Rad refines density_R consistently") {
  auto sys = parse_system("n; n+d");
  // summing the refined density over all residue choices returns the coarse one
  std::vector<u64> a = {1, 1}, dd = {2, 3}, q = {1, 1};
  Rat total(0);
  for (i64 v0 = 0; v0 < 2; v0++)
    for (i64 v1 = 0; v1 < 3; v1++)
      total = total + density_Rad(a, dd, sys, q, {0, 0}, {v0, v1});
  CHECK(total == Rat(1));
}

TEST_CASE("singular series reduces to the local-average product at equal moduli") {
  auto lam = named_mult_func("liouville");
  auto sys = parse_system("n; n+d");
  std::vector<MultFunc> fs = {lam, lam};
  std::vector<DirichletChar> chi(2, DirichletChar::trivial());
  auto ss = singular_series({1, 1}, 20.0, fs, sys, chi, {0, 0});
  CHECK_FALSE(ss.divergent);
  cplx prod = 1.0;
  for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL})
    prod *= local_average(fs, sys, p).value;
  CHECK(std::abs(ss.value - prod) <= 1e-6 + ss.tail_bound);
  CHECK(ss.normalizer == Rat(1));
}

TEST_CASE("main term: the trivial function over a 3-progression box is 1") {
  auto one = named_mult_func("one");
  auto sys = ap_system({0, 1, 2});
  auto box = BoxSpec::square(500, 2);
  std::vector<MultFunc> fs(3, one);
  std::vector<DirichletChar> chi(3, DirichletChar::trivial());
  auto rep = main_term(fs, chi, {0, 0, 0}, sys, box, 10.0);
  CHECK(rep.equal_moduli);
  CHECK(std::abs(rep.assembled - cplx(1.0)) <= 2e-6);
  CHECK(std::abs(rep.equal_branch - rep.general_branch) <= 1e-5);
  CHECK(rep.a_tail_bound <= 1e-9);
  CHECK(rep.euler_primes > 0);
  CHECK(rep.budget_total > 0);  // the faithful budget is huge at this scale
}

TEST_CASE("main term: character orthogonality zeroes the twisted 3-progression") {
  auto ext = named_mult_func("char-extended:5");
  auto chi5 = DirichletChar::real_primitive(5);
  auto sys = ap_system({0, 1, 2});
  auto box = BoxSpec::square(500, 2);
  std::vector<MultFunc> fs(3, ext);
  std::vector<DirichletChar> chi(3, chi5);
  auto rep = main_term(fs, chi, {0, 0, 0}, sys, box, 10.0);
  CHECK(rep.equal_moduli);
  // every a-term carries a vanishing character factor
  CHECK(std::abs(rep.assembled) <= 1e-12);
  for (const auto& at : rep.a_terms) CHECK(std::abs(at.xi) <= 1e-12);
}

TEST_CASE("main term validates its inputs") {
  auto one = named_mult_func("one");
  auto sys = ap_system({0, 1, 2});
  auto box = BoxSpec::square(500, 2);
  std::vector<MultFunc> fs(3, one);
  std::vector<DirichletChar> chi(3, DirichletChar::trivial());
  CHECK_THROWS_AS(main_term({one}, chi, {0, 0, 0}, sys, box, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(main_term(fs, {chi[0]}, {0, 0, 0}, sys, box, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(main_term(fs, chi, {0, 0, 0}, sys, box, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(main_term(fs, chi, {0, 0, 0}, sys, BoxSpec::square(10, 2), 10.0),
                  std::domain_error);
  // y must clear the largest character modulus
  std::vector<DirichletChar> c5(3, DirichletChar::real_primitive(5));
  CHECK_THROWS_AS(main_term(fs, c5, {0, 0, 0}, sys, box, 4.0), std::invalid_argument);
}
