#include "multavg/arith.hpp"

#include <algorithm>
#include <mutex>
#include <numeric>
#include <cmath>

#include "multavg/lattice.hpp"

namespace multavg {

// ---- Kronecker symbol -------------------------------------------------------

int kronecker(i64 a, i64 n) {
  if (n == 0) throw std::invalid_argument("kronecker: modulus 0");
  int s = 1;
  if (n < 0) {
    n = -n;
    if (a < 0) s = -s;
  }
  // factor out 2s of n: (a|2) = 0 for even a, else (-1)^((a^2-1)/8)
  while ((n & 1) == 0) {
    n >>= 1;
    if ((a & 1) == 0) return 0;
    i64 am = ((a % 8) + 8) % 8;
    if (am == 3 || am == 5) s = -s;
  }
  if (n == 1) return s;
  a %= n;
  if (a < 0) a += n;
  // Jacobi loop on odd n > 1
  while (a != 0) {
    while ((a & 1) == 0) {
      a >>= 1;
      i64 nm = n % 8;
      if (nm == 3 || nm == 5) s = -s;
    }
    std::swap(a, n);
    if ((a % 4) == 3 && (n % 4) == 3) s = -s;
    a %= n;
  }
  return n == 1 ? s : 0;
}

// ---- prime table / sieve ----------------------------------------------------

namespace {
std::vector<u64> g_primes;
u64 g_prime_limit = 0;
std::mutex g_prime_mutex;
}  // namespace

const std::vector<u64>& prime_table(u64 n) {
  std::lock_guard<std::mutex> lock(g_prime_mutex);
  if (n <= g_prime_limit && !g_primes.empty()) return g_primes;
  u64 lim = std::max<u64>(n, 1u << 16);
  std::vector<bool> comp(lim + 1, false);
  g_primes.clear();
  for (u64 i = 2; i <= lim; i++) {
    if (!comp[i]) {
      g_primes.push_back(i);
      for (u64 j = i * i; j <= lim; j += i) comp[j] = true;
    }
  }
  g_prime_limit = lim;
  return g_primes;
}

SpfSieve::SpfSieve(u64 n) {
  if (n > 3'000'000'000ULL) throw std::invalid_argument("SpfSieve: range too large");
  spf_.assign(n + 1, 0);
  for (u64 i = 2; i <= n; i++) {
    if (spf_[i] == 0) {
      for (u64 j = i; j <= n; j += i)
        if (spf_[j] == 0) spf_[j] = (std::uint32_t)i;
    }
  }
}

Factorization SpfSieve::factorize(u64 n) const {
  if (n == 0 || n > limit()) throw std::invalid_argument("SpfSieve::factorize out of range");
  Factorization f;
  while (n > 1) {
    u64 p = spf_[n];
    unsigned k = 0;
    while (n % p == 0) { n /= p; k++; }
    f.push_back({p, k});
  }
  std::sort(f.begin(), f.end(), [](auto& a, auto& b) { return a.p < b.p; });
  return f;
}

// ---- deterministic Miller-Rabin + Brent rho ---------------------------------

bool is_prime_u64(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  u64 d = n - 1;
  int r = 0;
  while ((d & 1) == 0) { d >>= 1; r++; }
  for (u64 a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    u64 x = powmod_u64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool witness = true;
    for (int i = 0; i < r - 1; i++) {
      x = mulmod_u64(x, x, n);
      if (x == n - 1) { witness = false; break; }
    }
    if (witness) return false;
  }
  return true;
}

namespace {

u64 brent_rho(u64 n) {
  if ((n & 1) == 0) return 2;
  u64 seed = 0xdeadbeefULL ^ n;
  while (true) {
    seed = splitmix64(seed);
    u64 y = seed % (n - 1) + 1;
    u64 c = splitmix64(seed) % (n - 1) + 1;
    u64 m = 128, g = 1, r = 1, q = 1, x = 0, ys = 0;
    while (g == 1) {
      x = y;
      for (u64 i = 0; i < r; i++) y = (mulmod_u64(y, y, n) + c) % n;
      for (u64 k = 0; k < r && g == 1; k += m) {
        ys = y;
        u64 lim = std::min(m, r - k);
        for (u64 i = 0; i < lim; i++) {
          y = (mulmod_u64(y, y, n) + c) % n;
          q = mulmod_u64(q, x > y ? x - y : y - x, n);
        }
        g = std::gcd(q, n);
      }
      r <<= 1;
    }
    if (g == n) {
      do {
        ys = (mulmod_u64(ys, ys, n) + c) % n;
        g = std::gcd(x > ys ? x - ys : ys - x, n);
      } while (g == 1);
    }
    if (g != n) return g;
  }
}

void factor_rec(u64 n, Factorization& out) {
  if (n == 1) return;
  if (is_prime_u64(n)) {
    out.push_back({n, 1});
    return;
  }
  u64 d = brent_rho(n);
  factor_rec(d, out);
  factor_rec(n / d, out);
}

}  // namespace

Factorization factorize(u64 n) {
  if (n == 0) throw std::invalid_argument("factorize(0)");
  Factorization f;
  const auto& ps = prime_table(1 << 16);
  for (u64 p : ps) {
    if (p * p > n) break;
    if (n % p == 0) {
      unsigned k = 0;
      while (n % p == 0) { n /= p; k++; }
      f.push_back({p, k});
    }
  }
  if (n > 1) {
    Factorization rest;
    factor_rec(n, rest);
    for (auto& pp : rest) {
      bool merged = false;
      for (auto& q : f)
        if (q.p == pp.p) { q.k += pp.k; merged = true; }
      if (!merged) f.push_back(pp);
    }
  }
  std::sort(f.begin(), f.end(), [](auto& a, auto& b) { return a.p < b.p; });
  return f;
}

u64 unfactorize(const Factorization& f) {
  u64 n = 1;
  for (auto& pp : f) n = mul_checked(n, pp.value());
  return n;
}

u64 rad(u64 n) {
  u64 r = 1;
  for (auto& pp : factorize(n)) r = mul_checked(r, pp.p);
  return r;
}

// ---- exact CRT densities ----------------------------------------------------

CrtDensity crt_count_enumerate(const std::vector<Congruence>& cs, int l) {
  u64 M = 1;
  for (auto& c : cs) {
    i128 big = (i128)(M / std::gcd(M, c.m)) * (i128)c.m;
    if (big > (i128)2'000'000'000ULL)
      throw std::invalid_argument("crt_count_enumerate: space too large");
    M = (u64)big;
  }
  u128 space = 1;
  for (int i = 0; i < l; i++) {
    space *= M;
    if (space > (u128)2'000'000'000ULL)
      throw std::invalid_argument("crt_count_enumerate: space too large");
  }
  // odometer over (Z/M)^l
  std::vector<u64> n(l, 0);
  u64 count = 0;
  while (true) {
    bool ok = true;
    for (auto& c : cs) {
      i128 v = c.cst - c.r;
      for (int i = 0; i < l; i++) v += (i128)c.coef[i] * (i128)n[i];
      i128 rm = v % (i128)c.m;
      if (rm != 0) { ok = false; break; }
    }
    if (ok) count++;
    int d = 0;
    while (d < l && ++n[d] == M) { n[d] = 0; d++; }
    if (d == l) break;
  }
  CrtDensity out;
  out.count = (i128)count;
  out.space = (i128)space;
  out.count_fits = true;
  out.density = Rat((i128)count, (i128)space);
  return out;
}

CrtDensity crt_count_factored(const std::vector<Congruence>& cs, int l) {
  // support primes
  std::vector<std::pair<u64, unsigned>> pe;  // prime -> max exponent in any modulus
  for (auto& c : cs) {
    for (auto& pp : factorize(c.m)) {
      bool found = false;
      for (auto& q : pe)
        if (q.first == pp.p) { q.second = std::max(q.second, pp.k); found = true; }
      if (!found) pe.push_back({pp.p, pp.k});
    }
  }
  std::sort(pe.begin(), pe.end());
  Rat dens(1);
  bool fits = true;
  i128 count = 1, space = 1;
  for (auto& [p, e] : pe) {
    u64 pm = pow_checked(p, e);
    ModSystem sys;
    sys.mod = pm;
    sys.l = l;
    for (auto& c : cs) {
      unsigned ec = 0;
      u64 m = c.m;
      while (m % p == 0) { m /= p; ec++; }
      if (ec == 0) continue;
      // p^ec | coef.n + cst - r  lifted to modulus p^e via multiplier p^{e-ec}
      u64 lift = pow_checked(p, e - ec);
      std::vector<i128> row(l);
      for (int i = 0; i < l; i++) row[i] = (i128)c.coef[i] * (i128)lift;
      sys.A.push_back(row);
      sys.b.push_back((i128)(c.r - c.cst) * (i128)lift);
    }
    Rat dp = mod_solution_density(sys);
    dens = dens * dp;
    // assemble unreduced pair while it fits
    if (fits) {
      i128 sp = 1;
      bool ok = true;
      for (int i = 0; i < l; i++) {
        if (sp > (i128)2e37 / (i128)pm) { ok = false; break; }
        sp *= (i128)pm;
      }
      if (ok && space <= (i128)2e37 / sp) {
        // count_p = density_p * pm^l exactly
        i128 cp = dp.num * (sp / dp.den);
        count *= cp;
        space *= sp;
      } else {
        fits = false;
      }
    }
  }
  CrtDensity out;
  out.density = dens;
  out.count_fits = fits;
  if (fits) { out.count = count; out.space = space; }
  return out;
}

CrtDensity crt_count(const std::vector<Congruence>& cs, int l, u64 enum_cap) {
  if (l <= 0) throw std::invalid_argument("crt_count: need l >= 1");
  for (auto& c : cs) {
    if ((int)c.coef.size() != l) throw std::invalid_argument("crt_count: constraint arity mismatch");
    if (c.m == 0) throw std::invalid_argument("crt_count: zero modulus");
  }
  u64 M = 1;
  bool small = true;
  for (auto& c : cs) {
    i128 big = (i128)(M / std::gcd(M, c.m)) * (i128)c.m;
    if (big > (i128)enum_cap) { small = false; break; }
    M = (u64)big;
  }
  if (small) {
    u128 space = 1;
    for (int i = 0; i < l && small; i++) {
      space *= M;
      if (space > enum_cap) small = false;
    }
    if (small) return crt_count_enumerate(cs, l);
  }
  return crt_count_factored(cs, l);
}

// ---- smooth numbers ---------------------------------------------------------

namespace {
u64 smooth_rec(u64 x, const std::vector<u64>& ps, size_t i) {
  // count of integers in [1,x] whose prime factors all lie in ps[i..]
  u64 total = 1;  // the empty product
  for (size_t j = i; j < ps.size(); j++) {
    if (ps[j] > x) break;
    u64 v = x / ps[j];
    u64 q = ps[j];
    while (true) {
      total += smooth_rec(v, ps, j + 1);
      if (v < q) break;
      v /= q;
    }
  }
  return total;
}
}  // namespace

u64 smooth_count(u64 x, u64 y) {
  if (x == 0) return 0;
  if (y < 2) return 1;  // only n = 1
  const auto& all = prime_table(y);
  std::vector<u64> ps;
  for (u64 p : all)
    if (p <= y) ps.push_back(p);
  return smooth_rec(x, ps, 0);
}

double debruijn_log_estimate(double x, double y) {
  if (x < 2 || y < 2) throw std::invalid_argument("debruijn_log_estimate: need x,y >= 2");
  double lx = std::log(x), ly = std::log(y);
  return lx / ly * std::log1p(y / lx) + y / ly * std::log1p(lx / y);
}

}  // namespace multavg
