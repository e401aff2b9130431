#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <bit>

#include "multavg/averages.hpp"

using namespace multavg;

namespace {

u64 rng_state = 0x3f84d5b5b5470917ULL;
u64 rnd() { return rng_state = splitmix64(rng_state); }

std::vector<cplx> random_signs(u64 n) {
  std::vector<cplx> v(n);
  for (auto& z : v) z = (rnd() & 1) ? 1.0 : -1.0;
  return v;
}

// literal U^2(Z_N)^4 cube sum, no regrouping
double u2_literal(const std::vector<cplx>& g) {
  const u64 N = g.size();
  cplx acc = 0;
  for (u64 n = 0; n < N; n++)
    for (u64 h1 = 0; h1 < N; h1++)
      for (u64 h2 = 0; h2 < N; h2++)
        acc += g[n] * std::conj(g[(n + h1) % N]) * std::conj(g[(n + h2) % N]) *
               g[(n + h1 + h2) % N];
  return acc.real() / (double)(N * N * N);
}

// literal U^3(Z_N)^8 cube sum
double u3_literal(const std::vector<cplx>& g) {
  const u64 N = g.size();
  cplx acc = 0;
  for (u64 n = 0; n < N; n++)
    for (u64 h1 = 0; h1 < N; h1++)
      for (u64 h2 = 0; h2 < N; h2++)
        for (u64 h3 = 0; h3 < N; h3++) {
          cplx term = 1.0;
          for (unsigned w = 0; w < 8; w++) {
            u64 s = n + (w & 1 ? h1 : 0) + (w & 2 ? h2 : 0) + (w & 4 ? h3 : 0);
            cplx v = g[s % N];
            term *= (std::popcount(w) % 2) ? std::conj(v) : v;
          }
          acc += term;
        }
  return acc.real() / std::pow((double)N, 4.0);
}

}  // namespace

TEST_CASE("brute_average of the trivial function is exactly 1") {
  auto one = named_mult_func("one");
  auto sys = ap_system({0, 1, 2});
  auto r = brute_average({one, one, one}, sys, BoxSpec::square(200, 2));
  CHECK(r.value.real() == 1.0);
  CHECK(r.value.imag() == 0.0);
  CHECK(r.samples == 200 * 200);
}

TEST_CASE("brute_average matches a hand-rolled progression loop") {
  auto lam = named_mult_func("liouville");
  auto sys = ap_system({0, 1, 2});
  u64 x = 60;
  auto vals = lam.bulk_eval(3 * x);
  cplx acc = 0;
  for (u64 d = 1; d <= x; d++)
    for (u64 n = 1; n <= x; n++) acc += vals[n] * vals[n + d] * vals[n + 2 * d];
  acc /= (double)(x * x);
  auto r = brute_average({lam, lam, lam}, sys, BoxSpec::square((double)x, 2));
  CHECK(std::abs(r.value - acc) <= 1e-12);
}

TEST_CASE("brute_average is thread-count invariant bit for bit") {
  auto lam = named_mult_func("liouville");
  auto sys = ap_system({0, 1, 3});
  auto box = BoxSpec::square(150, 2);
  auto r1 = brute_average({lam, lam, lam}, sys, box, 1);
  auto r4 = brute_average({lam, lam, lam}, sys, box, 4);
  CHECK(r1.value.real() == r4.value.real());
  CHECK(r1.value.imag() == r4.value.imag());
  CHECK(r1.partition == r4.partition);
}

TEST_CASE("group norms match the literal cube sums") {
  for (u64 N : {8ULL, 13ULL, 17ULL}) {
    auto g = random_signs(N);
    double u2 = gowers_group_norm(g, 2);
    CHECK(std::pow(u2, 4.0) == doctest::Approx(u2_literal(g)).epsilon(1e-10));
    double u3 = gowers_group_norm(g, 3);
    CHECK(std::pow(u3, 8.0) == doctest::Approx(u3_literal(g)).epsilon(1e-9));
  }
}

TEST_CASE("group norms are monotone in k and invariant under linear phases") {
  for (u64 N : {17ULL, 32ULL, 101ULL}) {
    auto g = random_signs(N);
    double u2 = gowers_group_norm(g, 2);
    double u3 = gowers_group_norm(g, 3);
    CHECK(u2 <= u3 + 1e-9);
    // only group characters e(jn/N) leave the norm invariant, so j integral
    double alpha = 3.0 / (double)N;
    auto tw = g;
    for (u64 n = 0; n < N; n++)
      tw[n] *= std::exp(cplx(0, 2 * 3.14159265358979323846 * alpha * (double)n));
    CHECK(gowers_group_norm(tw, 2) == doctest::Approx(u2).epsilon(1e-9));
    CHECK(gowers_group_norm(tw, 3) == doctest::Approx(u3).epsilon(1e-9));
  }
}

TEST_CASE("interval norms: fft equals direct and the indicator has norm 1") {
  for (u64 x : {2ULL, 5ULL, 16ULL, 33ULL, 64ULL, 100ULL, 128ULL}) {
    auto v = random_signs(x);
    auto d = gowers_norm(v, 2, "direct");
    auto f = gowers_norm(v, 2, "fft");
    CHECK(std::abs(d.value - f.value) <= 1e-9);
    CHECK(d.N == f.N);
    CHECK(d.N > 4 * x);
    CHECK(is_prime_u64(d.N));
  }
  auto one = named_mult_func("one");
  for (unsigned k : {2u, 3u}) {
    auto r = gowers_norm(one, 200, k);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
  }
  auto v = random_signs(40);
  CHECK_THROWS_AS(gowers_norm(v, 3, "fft"), std::invalid_argument);
}

TEST_CASE("the box identity residual stays small at moderate x") {
  for (const char* name : {"one", "liouville"}) {
    auto f = named_mult_func(name);
    auto vals = f.bulk_eval(64);
    vals.erase(vals.begin());  // gowers values are 1-based
    CHECK(gowers_identity_check(vals, 2) <= 0.06);
  }
}

TEST_CASE("compare reconciles matching provenance and applies the verdict rules") {
  AverageResult emp;
  emp.value = 0.5;
  emp.provenance = "tag-A";
  MainTermReport pred;
  pred.assembled = 0.5 + 1e-6;
  pred.budget_total = 1e-3;
  pred.provenance = "tag-A";

  auto ok = compare(emp, pred, 10.0);
  CHECK(ok.verdict == CompareResult::Verdict::pass);
  CHECK(ok.diff == doctest::Approx(1e-6));

  pred.assembled = 0.8;
  auto bad = compare(emp, pred, 10.0);
  CHECK(bad.verdict == CompareResult::Verdict::fail);

  pred.budget_total = 0.7;  // vacuous budget: verdict withheld
  auto vac = compare(emp, pred, 10.0);
  CHECK(vac.verdict == CompareResult::Verdict::inconclusive);

  pred.provenance = "tag-B";
  CHECK_THROWS_AS(compare(emp, pred, 10.0), std::invalid_argument);
}

TEST_CASE("Turan-Kubilius probe for liouville sits well under the bound") {
  auto lam = named_mult_func("liouville");
  AffineForm form{{1}, 0};
  auto r = tk_check(lam, form, BoxSpec::square(5000, 1));
  CHECK(r.lhs > 0);
  CHECK(r.rhs > 0);
  CHECK(r.ratio > 0.2);
  CHECK(r.ratio < 0.6);
}

TEST_CASE("the progression average never exceeds the smallest U^2 norm") {
  // dense all-ones input: average 1, norm 1
  std::vector<std::vector<cplx>> ones(3, std::vector<cplx>(31, 1.0));
  CHECK(gvn_excess(ones) <= 1e-12);
  for (int it = 0; it < 50; it++) {
    u64 N = 11 + 2 * (rnd() % 30);
    std::vector<std::vector<cplx>> f(3);
    for (auto& v : f) v = random_signs(N);
    CHECK(gvn_excess(f) <= 1e-9);
  }
  auto g = gvn_check(101, 200, 7);
  CHECK(g.max_excess <= 1e-9);
  CHECK(g.trials == 200);
}

TEST_CASE("the decay envelope shrinks with distance and grows with neither") {
  double a = rf_diagnostic(0.0, 1e6);
  double b = rf_diagnostic(4.0, 1e6);
  double c = rf_diagnostic(16.0, 1e6);
  CHECK(a > b);
  CHECK(b > c);
  CHECK(c > 0);
}
