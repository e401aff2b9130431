#include "multavg/multfunc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace multavg {

namespace {

constexpr double kBoundTol = 1e-12;

cplx unit_root(double num, double den) {
  const double ang = 2.0 * std::numbers::pi * num / den;
  return {std::cos(ang), std::sin(ang)};
}

}  // namespace

MultFunc::MultFunc(std::string name, bool completely_mult, PrimePowerOracle oracle)
    : name_(std::move(name)), completely_mult_(completely_mult), oracle_(std::move(oracle)) {}

cplx MultFunc::pp(u64 p, unsigned k) const {
  if (k == 0) return 1.0;
  const cplx v = oracle_ ? oracle_(p, k) : cplx(1.0);
  if (std::abs(v) > 1.0 + kBoundTol)
    throw std::domain_error(name_ + ": value at " + std::to_string(p) + "^" +
                            std::to_string(k) + " exceeds the unit disc");
  return v;
}

cplx MultFunc::eval(u64 n) const {
  if (n == 0) throw std::domain_error("mult func evaluated at 0");
  cplx out = 1.0;
  for (const auto& pk : factorize(n)) out *= pp(pk.p, pk.k);
  return out;
}

std::vector<cplx> MultFunc::bulk_eval(u64 N) const {
  std::vector<cplx> v(N + 1, cplx(0.0));
  if (N >= 1) v[1] = 1.0;
  if (N < 2) return v;
  SpfSieve sieve(N);
  for (u64 n = 2; n <= N; ++n) {
    const u64 p = sieve.spf(n);
    u64 m = n;
    unsigned k = 0;
    while (m % p == 0) {
      m /= p;
      ++k;
    }
    v[n] = v[m] * pp(p, k);
  }
  return v;
}

MultFunc MultFunc::localize(u64 p) const {
  if (!is_prime_u64(p)) throw std::domain_error("localize at a non-prime");
  auto oracle = oracle_;
  return MultFunc(name_ + "@" + std::to_string(p), false,
                  [oracle, p](u64 q, unsigned k) -> cplx {
                    if (q != p) return 1.0;
                    return oracle ? oracle(q, k) : cplx(1.0);
                  });
}

// ---- Dirichlet characters ---------------------------------------------------

namespace {

u64 powmod_small(u64 b, u64 e, u64 m) { return powmod_u64(b % m, e, m); }

u64 primitive_root_mod_p(u64 p) {
  if (p == 2) return 1;
  const u64 phi = p - 1;
  auto fac = factorize(phi);
  for (u64 g = 2; g < p; ++g) {
    bool ok = true;
    for (const auto& pk : fac)
      if (powmod_small(g, phi / pk.p, p) == 1) {
        ok = false;
        break;
      }
    if (ok) return g;
  }
  throw std::logic_error("no primitive root found");
}

// generator of (Z/p^e)^* for odd p
u64 primitive_root_mod_pe(u64 p, unsigned e) {
  u64 g = primitive_root_mod_p(p);
  if (e == 1) return g;
  if (powmod_small(g, p - 1, p * p) == 1) g += p;
  return g;
}

}  // namespace

DirichletChar DirichletChar::trivial() {
  DirichletChar chi;
  chi.q_ = 1;
  chi.real_backend_ = true;
  return chi;
}

DirichletChar DirichletChar::real_primitive(u64 q) {
  if (q == 1) return trivial();
  if (q % 2 == 0) throw std::domain_error("real primitive character: modulus must be odd");
  for (const auto& pk : factorize(q))
    if (pk.k > 1) throw std::domain_error("real primitive character: modulus must be squarefree");
  DirichletChar chi;
  chi.q_ = q;
  chi.real_backend_ = true;
  return chi;
}

std::vector<DirichletChar> DirichletChar::group(u64 q) {
  if (q == 0) throw std::domain_error("character group: modulus 0");
  if (q > 10000) throw std::domain_error("character group: modulus above table cap 10^4");
  // cyclic decomposition of (Z/q)^*
  std::vector<Component> comps;
  bool two_special = false;
  for (const auto& pk : factorize(q)) {
    const u64 p = pk.p;
    const u64 pe = pk.value();
    if (p == 2) {
      if (pk.k == 1) {
        Component c;
        c.p = 2;
        c.pe = 2;
        c.order = 1;
        c.dlog.assign(2, 1);  // sentinel c.order marks non-units
        c.dlog[1] = 0;
        comps.push_back(c);
      } else if (pk.k == 2) {
        Component c;
        c.p = 2;
        c.pe = 4;
        c.order = 2;
        c.dlog.assign(4, 2);
        c.dlog[1] = 0;
        c.dlog[3] = 1;
        comps.push_back(c);
      } else {
        two_special = true;
        const u64 half = pe >> 2;  // order of 5 mod 2^e
        Component sign, five;
        sign.p = five.p = 2;
        sign.pe = five.pe = pe;
        sign.order = 2;
        five.order = half;
        sign.dlog.assign(pe, 2);
        five.dlog.assign(pe, half);
        u64 x = 1;
        for (u64 a = 0; a < half; ++a) {
          sign.dlog[x] = 0;
          five.dlog[x] = a;
          sign.dlog[pe - x] = 1;
          five.dlog[pe - x] = a;
          x = (x * 5) % pe;
        }
        comps.push_back(sign);
        comps.push_back(five);
      }
    } else {
      Component c;
      c.p = p;
      c.pe = pe;
      c.order = pe - pe / p;
      const u64 g = primitive_root_mod_pe(p, pk.k);
      c.dlog.assign(pe, c.order);
      u64 x = 1;
      for (u64 a = 0; a < c.order; ++a) {
        c.dlog[x] = a;
        x = (x * g) % pe;
      }
      comps.push_back(c);
    }
  }
  // all index tuples via an odometer
  std::vector<DirichletChar> out;
  std::vector<u64> idx(comps.size(), 0);
  while (true) {
    DirichletChar chi;
    chi.q_ = q;
    chi.real_backend_ = false;
    chi.comps_ = comps;
    chi.two_special_ = two_special;
    for (size_t i = 0; i < comps.size(); ++i) chi.comps_[i].index = idx[i];
    out.push_back(std::move(chi));
    size_t i = 0;
    for (; i < comps.size(); ++i) {
      if (++idx[i] < comps[i].order) break;
      idx[i] = 0;
    }
    if (i == comps.size()) break;
  }
  return out;
}

cplx DirichletChar::value(u64 n) const {
  n %= q_;
  if (real_backend_) return cplx(static_cast<double>(kronecker(static_cast<i64>(n), static_cast<i64>(q_))));
  cplx out = 1.0;
  for (const auto& c : comps_) {
    const u64 a = c.dlog[n % c.pe];
    if (a >= c.order) return 0.0;  // sentinel: non-unit residue
    out *= unit_root(static_cast<double>((c.index * a) % c.order),
                     static_cast<double>(c.order));
  }
  return out;
}

cplx DirichletChar::value_signed(i64 n) const {
  const i64 q = static_cast<i64>(q_);
  i64 r = n % q;
  if (r < 0) r += q;
  return value(static_cast<u64>(r));
}

cplx DirichletChar::component_value(u64 p, u64 n) const {
  if (real_backend_) {
    if (q_ % p != 0) return 1.0;
    return cplx(static_cast<double>(kronecker(static_cast<i64>(n % p), static_cast<i64>(p))));
  }
  cplx out = 1.0;
  for (const auto& c : comps_) {
    if (c.p != p) continue;
    const u64 a = c.dlog[n % c.pe];
    if (a >= c.order) return 0.0;
    out *= unit_root(static_cast<double>((c.index * a) % c.order),
                     static_cast<double>(c.order));
  }
  return out;
}

u64 DirichletChar::conductor() const {
  if (conductor_cache_ >= 0) return static_cast<u64>(conductor_cache_);
  // smallest d | q with chi(n) = 1 whenever n = 1 (mod d), (n, q) = 1
  std::vector<u64> divs;
  for (u64 d = 1; d * d <= q_; ++d)
    if (q_ % d == 0) {
      divs.push_back(d);
      if (d != q_ / d) divs.push_back(q_ / d);
    }
  std::sort(divs.begin(), divs.end());
  for (u64 d : divs) {
    bool ok = true;
    for (u64 n = 1 + d; n <= q_ && ok; n += d) {
      if (std::gcd(n, q_) != 1) continue;
      if (std::abs(value(n) - cplx(1.0)) > 1e-9) ok = false;
    }
    if (ok) {
      conductor_cache_ = static_cast<i64>(d);
      return d;
    }
  }
  conductor_cache_ = static_cast<i64>(q_);
  return q_;
}

bool DirichletChar::real() const {
  if (real_backend_) return true;
  for (const auto& c : comps_)
    if ((2 * c.index) % c.order != 0) return false;
  return true;
}

int DirichletChar::parity() const {
  const cplx v = value(q_ == 1 ? 0 : q_ - 1);
  return v.real() >= 0 ? 1 : -1;
}

MultFunc DirichletChar::as_mult_func() const {
  DirichletChar chi = *this;
  return MultFunc("char:" + label(), true, [chi](u64 p, unsigned k) -> cplx {
    return chi.value(powmod_u64(p % chi.modulus(), k, chi.modulus()));
  });
}

MultFunc DirichletChar::extended_by_one() const {
  DirichletChar chi = *this;
  return MultFunc("char-ext:" + label(), true, [chi](u64 p, unsigned k) -> cplx {
    if (chi.modulus() % p == 0) return 1.0;
    return chi.value(powmod_u64(p % chi.modulus(), k, chi.modulus()));
  });
}

std::string DirichletChar::label() const {
  if (real_backend_) return "kron(" + std::to_string(q_) + ")";
  std::string s = "mod" + std::to_string(q_) + "[";
  for (size_t i = 0; i < comps_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(comps_[i].index);
  }
  return s + "]";
}

// ---- twists -----------------------------------------------------------------

cplx ArchTwist::value(double n) const {
  if (n <= 0) throw std::domain_error("archimedean twist at a non-positive point");
  const double ang = -t * std::log(n);
  return {std::cos(ang), std::sin(ang)};
}

MultFunc TwistedFunc::as_mult_func() const {
  MultFunc base = f;
  DirichletChar ch = chi;
  const double tt = t;
  const u64 q = chi.modulus();
  std::string nm = "twist(" + f.name() + "," + chi.label() + ",t=" + std::to_string(tt) + ")";
  return MultFunc(std::move(nm), false, [base, ch, tt, q](u64 p, unsigned k) -> cplx {
    if (q % p == 0) return 1.0;
    const cplx chv = std::conj(ch.value(powmod_u64(p % q, k, q)));
    const double ang = -tt * static_cast<double>(k) * std::log(static_cast<double>(p));
    return base.pp(p, k) * chv * cplx(std::cos(ang), std::sin(ang));
  });
}

// ---- distances --------------------------------------------------------------

double distance(const MultFunc& f, const MultFunc& g, double y, double x) {
  if (!(y >= 1.0 && y <= x)) throw std::domain_error("distance: need 1 <= y <= x");
  const auto& primes = prime_table(static_cast<u64>(x));
  double s = 0;
  for (u64 p : primes) {
    const double pd = static_cast<double>(p);
    if (pd <= y || pd > x) continue;
    s += (1.0 - (f.pp(p, 1) * std::conj(g.pp(p, 1))).real()) / pd;
  }
  return std::sqrt(std::max(s, 0.0));
}

double distance_star(const MultFunc& f, const MultFunc& g, double y, double x) {
  if (!(y >= 1.0 && y <= x)) throw std::domain_error("distance: need 1 <= y <= x");
  const auto& primes = prime_table(static_cast<u64>(x));
  double s = 0;
  for (u64 p : primes) {
    if (static_cast<double>(p) > x) break;
    double pk = static_cast<double>(p);
    for (unsigned k = 1; pk <= x; ++k, pk *= static_cast<double>(p)) {
      if (pk <= y) continue;
      s += (1.0 - (f.pp(p, k) * std::conj(g.pp(p, k))).real()) / pk;
    }
  }
  return std::sqrt(std::max(s, 0.0));
}

MinDistanceResult min_distance(const MultFunc& g, double X, u64 Q, double grid_step) {
  if (X < 2) throw std::domain_error("min_distance: need X >= 2");
  if (Q < 1) throw std::domain_error("min_distance: need Q >= 1");
  if (grid_step <= 0) grid_step = 0.05 / std::log(X);

  struct Cand {
    u64 q;
    int idx;
    DirichletChar chi;
  };
  std::vector<Cand> cands;
  for (u64 q = 1; q <= Q; ++q) {
    auto grp = DirichletChar::group(q);
    for (int i = 0; i < static_cast<int>(grp.size()); ++i)
      cands.push_back({q, i, grp[i]});
  }

  const auto& primes = prime_table(static_cast<u64>(X));
  std::vector<u64> ps;
  for (u64 p : primes)
    if (static_cast<double>(p) <= X) ps.push_back(p);

  const i64 nsteps = static_cast<i64>(std::floor(2.0 * X / grid_step));
  std::vector<double> best(cands.size());
  std::vector<double> best_t(cands.size());

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (i64 ci = 0; ci < static_cast<i64>(cands.size()); ++ci) {
    const auto& cand = cands[static_cast<size_t>(ci)];
    const size_t np = ps.size();
    std::vector<cplx> a(np);       // g(p) conj(chi(p)) / p
    std::vector<double> logp(np);
    double base = 0;  // sum 1/p
    for (size_t i = 0; i < np; ++i) {
      const double pd = static_cast<double>(ps[i]);
      base += 1.0 / pd;
      a[i] = g.pp(ps[i], 1) * std::conj(cand.chi.value(ps[i])) / pd;
      logp[i] = std::log(pd);
    }
    std::vector<cplx> rot(np), delta(np);
    for (size_t i = 0; i < np; ++i)
      delta[i] = cplx(std::cos(-grid_step * logp[i]), std::sin(-grid_step * logp[i]));
    double bv = 1e300, bt = 0;
    auto reseed = [&](double t0) {
      for (size_t i = 0; i < np; ++i)
        rot[i] = cplx(std::cos(-t0 * logp[i]), std::sin(-t0 * logp[i]));
    };
    for (i64 j = 0; j <= nsteps + 1; ++j) {
      const double t = (j <= nsteps) ? -X + static_cast<double>(j) * grid_step : X;
      if (j % 4096 == 0 || j == nsteps + 1) {
        reseed(t);
      } else {
        for (size_t i = 0; i < np; ++i) rot[i] *= delta[i];
      }
      double re = 0;
      for (size_t i = 0; i < np; ++i) re += (a[i] * rot[i]).real();
      const double val = base - re;
      if (val < bv) {
        bv = val;
        bt = t;
      }
    }
    best[static_cast<size_t>(ci)] = bv;
    best_t[static_cast<size_t>(ci)] = bt;
  }

  MinDistanceResult res;
  res.value = 1e300;
  for (size_t ci = 0; ci < cands.size(); ++ci) {
    if (best[ci] < res.value) {
      res.value = best[ci];
      res.q = cands[ci].q;
      res.char_index = cands[ci].idx;
      res.char_label = cands[ci].chi.label();
      res.t = best_t[ci];
    }
  }
  res.value = std::max(res.value, 0.0);
  return res;
}

AdditiveMoments additive_moments(const MultFunc& f, double x) {
  if (x < 2) throw std::domain_error("additive_moments: need x >= 2");
  AdditiveMoments out;
  const auto& primes = prime_table(static_cast<u64>(x));
  for (u64 p : primes) {
    const double pd = static_cast<double>(p);
    if (pd > x) break;
    const double wbase = 1.0 - 1.0 / pd;
    double pk = pd;
    for (unsigned k = 1; pk <= x; ++k, pk *= pd) {
      const cplx h = f.pp(p, k) - 1.0;
      const double w = wbase / pk;
      out.mu += h * w;
      out.sigma2 += std::norm(h) * w;
    }
  }
  return out;
}

// ---- registry ---------------------------------------------------------------

MultFunc named_mult_func(const std::string& name) {
  if (name == "one") return MultFunc("one", true, [](u64, unsigned) -> cplx { return 1.0; });
  if (name == "liouville")
    return MultFunc("liouville", true,
                    [](u64, unsigned k) -> cplx { return (k % 2) ? -1.0 : 1.0; });
  if (name == "mobius-squared")
    return MultFunc("mobius-squared", false,
                    [](u64, unsigned k) -> cplx { return (k == 1) ? 1.0 : 0.0; });
  const auto colon = name.find(':');
  if (colon != std::string::npos) {
    const std::string head = name.substr(0, colon);
    const std::string tail = name.substr(colon + 1);
    u64 q = 0;
    try {
      q = std::stoull(tail);
    } catch (...) {
      throw std::invalid_argument("bad modulus in function name: " + name);
    }
    if (head == "char-real") return DirichletChar::real_primitive(q).as_mult_func();
    if (head == "char-extended") return DirichletChar::real_primitive(q).extended_by_one();
  }
  throw std::invalid_argument(
      "unknown function '" + name +
      "' (known: one, liouville, mobius-squared, char-real:q, char-extended:q)");
}

}  // namespace multavg
