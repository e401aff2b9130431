#pragma once
// Integer substrate: Kronecker symbol, factorization (sieve + Pollard rho),
// exact CRT solution densities, smooth-number counts.

#include <vector>
#include <optional>

#include "multavg/base.hpp"
#include "multavg/rational.hpp"

namespace multavg {

struct PrimePower {
  u64 p = 0;
  unsigned k = 0;
  u64 value() const { return pow_checked(p, k); }  // checked against u64 wrap
};

// prime powers with strictly increasing p; product reconstructs n
using Factorization = std::vector<PrimePower>;

// Kronecker symbol (a|n). n = 0 rejected; only odd n > 0 is exercised by the
// engine but the general extension (even and negative n) is provided.
int kronecker(i64 a, i64 n);

// smallest-prime-factor sieve for bulk work on [1, n]
class SpfSieve {
 public:
  explicit SpfSieve(u64 n);
  u64 limit() const { return (u64)spf_.size() - 1; }
  std::uint32_t spf(u64 n) const { return spf_[n]; }
  Factorization factorize(u64 n) const;

 private:
  std::vector<std::uint32_t> spf_;
};

// full-range factorization; trial division through a shared prime table,
// Miller-Rabin + Brent-rho above it
Factorization factorize(u64 n);
u64 unfactorize(const Factorization& f);
u64 rad(u64 n);
bool is_prime_u64(u64 n);

// primes in [2, n]
const std::vector<u64>& prime_table(u64 n);

// one linear congruence on (Z/mZ)^l: sum_i coef[i]*n_i + cst == r (mod m)
struct Congruence {
  std::vector<i64> coef;
  i64 cst = 0;
  i64 r = 0;
  u64 m = 1;
};

struct CrtDensity {
  Rat density;                    // exact count / M^l, reduced
  bool count_fits = false;        // unreduced pair only reported when M^l fits i128
  i128 count = 0;
  i128 space = 0;                 // M^l when count_fits
};

// Exact density of solutions of the constraint set in (Z/MZ)^l, M = lcm of moduli.
// Direct enumeration when M^l <= enum_cap, otherwise factored by prime with
// per-prime Smith-normal-form counting; the two paths agree exactly.
CrtDensity crt_count(const std::vector<Congruence>& cs, int l, u64 enum_cap = 1'000'000);

// forced-path variants (used by cross-check tests)
CrtDensity crt_count_enumerate(const std::vector<Congruence>& cs, int l);
CrtDensity crt_count_factored(const std::vector<Congruence>& cs, int l);

// Psi(x, y): y-smooth integers in [1, x]
u64 smooth_count(u64 x, u64 y);

// log-scale estimate of log Psi(x,y):
//   (log x/log y) log(1 + y/log x) + (y/log y) log(1 + log x/y)
double debruijn_log_estimate(double x, double y);

}  // namespace multavg
