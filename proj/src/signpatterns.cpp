// Sign-pattern censuses and the elliptic-curve bias pipeline. Identity-suite
// sums run over complete residue systems with a real character, so every value
// is an exact small integer in double storage; census counting is pure integer
// work on a +-1 sieve, and only the final densities leave exact arithmetic.

#include "multavg/signpatterns.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "multavg/arith.hpp"
#include "multavg/local.hpp"

namespace multavg {

namespace {

constexpr u64 kCensusCap = 32'000'000;  // sieve range bound

i64 chi_int(const DirichletChar& chi, u64 n) {
  const cplx v = chi.value(n);
  return (i64)std::lround(v.real());
}

bool squarefree(const Factorization& fac) {
  for (const auto& pp : fac)
    if (pp.k != 1) return false;
  return true;
}

void check_q(u64 q, const char* who) {
  if (q < 5 || std::gcd(q, (u64)6) != 1)
    throw std::domain_error(std::string(who) + ": q must be >= 5 and coprime to 6");
  if (!squarefree(factorize(q)))
    throw std::domain_error(std::string(who) + ": q must be squarefree");
}

// F identically 1 on every p-power the engine can see; then M_p = 1 to double
// precision (first deviation has density below 2^-62)
bool one_at_all_powers(const MultFunc& F, u64 p) {
  u64 pk = p;
  for (unsigned k = 1;; k++) {
    if (F.pp(p, k) != cplx(1.0)) return false;
    if (pk > (1ull << 62) / p) return true;
    pk *= p;
  }
}

// prod_{p <= P, p coprime to q} M_p(F,...,F; sys)
double local_product(const MultFunc& F, const FormSystem& sys, u64 P, u64 q) {
  LocalParams lp;
  lp.tol = 1e-12;
  lp.dual = false;
  const std::vector<MultFunc> fvec((size_t)sys.k(), F);
  double prod = 1.0;
  for (u64 p : prime_table(P)) {
    if (p > P) break;
    if (q % p == 0) continue;
    if (one_at_all_powers(F, p)) continue;
    prod *= local_average(fvec, sys, p, lp).value.real();
  }
  return prod;
}

std::vector<int> subset_vec(unsigned mask) {
  std::vector<int> s;
  for (int j = 0; j < 4; j++)
    if (mask >> j & 1) s.push_back(j);
  return s;
}

// +-1 sieve of f on [1, range]; rejects values off the unit sign set
std::vector<std::int8_t> sign_sieve(const MultFunc& f, u64 range, const char* who) {
  if (range > kCensusCap) throw std::overflow_error(std::string(who) + ": range overflow");
  const auto table = f.bulk_eval(range);
  std::vector<std::int8_t> s(range + 1, 0);
  for (u64 n = 1; n <= range; n++) {
    const cplx v = table[n];
    if (std::abs(v.imag()) > 1e-9 || std::abs(std::abs(v.real()) - 1.0) > 1e-9)
      throw std::domain_error(std::string(who) + ": f must take values +-1 on the range");
    s[n] = v.real() > 0 ? 1 : -1;
  }
  return s;
}

}  // namespace

SignPattern::SignPattern(std::vector<int> e) : eps(std::move(e)) {
  if (eps.size() != 3 && eps.size() != 4)
    throw std::invalid_argument("SignPattern: length must be 3 or 4");
  for (int v : eps)
    if (v != 1 && v != -1) throw std::invalid_argument("SignPattern: entries must be +-1");
}

SignPattern SignPattern::from_index(unsigned idx, int m) {
  if (m != 3 && m != 4) throw std::invalid_argument("SignPattern: length must be 3 or 4");
  if (idx >= (1u << m)) throw std::invalid_argument("SignPattern: index out of range");
  std::vector<int> e((size_t)m);
  for (int j = 0; j < m; j++) e[(size_t)j] = (idx >> j & 1) ? -1 : 1;
  return SignPattern(std::move(e));
}

unsigned SignPattern::index() const {
  unsigned idx = 0;
  for (int j = 0; j < m(); j++)
    if (eps[(size_t)j] < 0) idx |= 1u << j;
  return idx;
}

int SignPattern::product() const {
  int p = 1;
  for (int v : eps) p *= v;
  return p;
}

int SignPattern::pair_sum() const {
  int s = 0;
  for (int i = 0; i < m(); i++)
    for (int j = i + 1; j < m(); j++) s += eps[(size_t)i] * eps[(size_t)j];
  return s;
}

std::string SignPattern::str() const {
  std::string s;
  for (int v : eps) s += v > 0 ? '+' : '-';
  return s;
}

LegendreCurve ec_count(u64 p, u64 lambda) {
  if (!is_prime_u64(p) || p < 5)
    throw std::domain_error("ec_count: p must be a prime coprime to 6");
  if (p > 50'000'000) throw std::domain_error("ec_count: p exceeds the sweep cap");
  const u64 lam = lambda % p;
  if (lam == 0 || lam == 1) throw std::domain_error("ec_count: singular lambda");
  const auto chi = DirichletChar::real_primitive(p);
  i64 s = 0;
  for (u64 x = 0; x < p; x++) {
    const u64 v = mulmod_u64(mulmod_u64(x, (x + p - 1) % p, p), (x + p - lam) % p, p);
    s += chi_int(chi, v);
  }
  LegendreCurve c;
  c.p = p;
  c.lambda = lam;
  c.points = (u64)((i64)p + 1 + s);
  c.delta = -s;
  if ((double)c.delta * (double)c.delta > 4.0 * (double)p)
    throw std::logic_error("ec_count: Hasse bound violated");
  return c;
}

LegendreCurve lemma_curve(u64 p) {
  if (!is_prime_u64(p) || p < 5)
    throw std::domain_error("lemma_curve: p must be a prime coprime to 6");
  const u64 binv = powmod_u64(2, p - 2, p);
  const u64 lam = mulmod_u64(3 % p, mulmod_u64(binv, binv, p), p);
  return ec_count(p, lam);
}

BlankSumResult blank_sum(u64 p) {
  const auto curve = lemma_curve(p);
  const auto chi = DirichletChar::real_primitive(p);
  i64 s = 0;
  for (u64 d = 0; d < p; d++) {
    u64 v = d;
    for (u64 t = 1; t <= 3; t++) v = mulmod_u64(v, (d + t) % p, p);
    s += chi_int(chi, v);
  }
  BlankSumResult out;
  out.sum = s;
  out.predicted = -(curve.delta + 1);
  out.residual = s - out.predicted;
  return out;
}

i64 jacobi_sum_check(u64 p) {
  if (!is_prime_u64(p) || p < 3) throw std::domain_error("jacobi_sum_check: p must be an odd prime");
  const auto chi = DirichletChar::real_primitive(p);
  i64 J = 0;
  for (u64 b = 0; b < p; b++) J += chi_int(chi, b) * chi_int(chi, (1 + p - b) % p);
  return J + chi_int(chi, p - 1);
}

ElltransResult elltrans_check(u64 q) {
  check_q(q, "elltrans_check");
  const auto chi = DirichletChar::real_primitive(q);
  const FormSystem sys = ap_system({0, 1, 2, 3});
  const std::vector<DirichletChar> chis(4, chi);

  ElltransResult out;
  out.xi = char_factor({1, 1, 1, 1}, chis, sys);

  const auto fac = factorize(q);
  double predicted = fac.size() % 2 ? -1.0 : 1.0;
  for (const auto& pp : fac) {
    predicted *= (double)(pp.p - 1);
    predicted *= (double)lemma_curve(pp.p).delta;
  }
  out.predicted = predicted;
  out.residual = std::abs(out.xi - predicted);

  out.vanishing_ok = true;
  std::vector<std::vector<u64>> probes;
  for (const auto& pp : fac) {
    const u64 p = pp.p;
    probes.push_back({p, 1, 1, 1});
    probes.push_back({1, p, 1, 1});
    probes.push_back({1, 1, p, 1});
    probes.push_back({1, 1, 1, p});
    probes.push_back({p, p, 1, 1});
    probes.push_back({p, 1, p, 1});
    probes.push_back({p, p, p, 1});
  }
  if (fac.size() > 1) probes.push_back({q, 1, 1, 1});
  for (const auto& a : probes)
    if (std::abs(char_factor(a, chis, sys)) > 1e-9) out.vanishing_ok = false;
  return out;
}

double triv23_max(u64 q) {
  check_q(q, "triv23_max");
  const auto chi = DirichletChar::real_primitive(q);
  const u64 p0 = factorize(q)[0].p;
  double mx = 0;
  for (unsigned mask = 0; mask < 16; mask++) {
    const int sz = std::popcount(mask);
    if (sz != 2 && sz != 3) continue;
    const FormSystem sys = ap_system(subset_vec(mask));
    const std::vector<DirichletChar> chis((size_t)sz, chi);
    const std::vector<std::vector<u64>> probes = {
        std::vector<u64>((size_t)sz, 1),
        std::vector<u64>((size_t)sz, q),
        [&] {
          std::vector<u64> a((size_t)sz, 1);
          a[0] = p0;
          return a;
        }(),
    };
    for (const auto& a : probes) mx = std::max(mx, std::abs(char_factor(a, chis, sys)));
  }
  return mx;
}

BiasResult bias(const MultFunc& f, u64 q, u64 P) {
  check_q(q, "bias");
  if (P < 10) throw std::invalid_argument("bias: P too small");
  const auto chi = DirichletChar::real_primitive(q);
  BiasResult out;
  out.P = P;
  out.local_tail = 4.0 / (double)P;

  const auto fac = factorize(q);
  for (const auto& pp : fac)
    out.curve_product *= -(double)lemma_curve(pp.p).delta / (double)(pp.p + 1);

  const MultFunc F = TwistedFunc{f, chi, 0.0}.as_mult_func();
  out.local_product = local_product(F, ap_system({0, 1, 2, 3}), P, q);

  out.dist = distance(f, chi.as_mult_func(), 1.0, 1e4);
  out.sane = out.dist <= 3.0;

  out.verified_path = true;
  for (const auto& pp : fac)
    for (unsigned k = 1; k <= 20; k++)
      if (std::abs(std::abs(f.pp(pp.p, k)) - 1.0) > 1e-9) {
        out.verified_path = false;
        break;
      }
  return out;
}

double a_eps(const MultFunc& f, u64 q, const SignPattern& eps, u64 P) {
  if (eps.m() != 4) throw std::invalid_argument("a_eps: pattern length must be 4");
  const BiasResult b = bias(f, q, P);
  return (double)eps.product() * b.curve_product * b.local_product;
}

TConstants t_constants(const MultFunc& f, u64 q, u64 P) {
  check_q(q, "t_constants");
  if (P < 10) throw std::invalid_argument("t_constants: P too small");
  const auto chi = DirichletChar::real_primitive(q);
  const MultFunc F = TwistedFunc{f, chi, 0.0}.as_mult_func();

  TConstants out;
  out.P = P;
  out.tail = 4.0 / (double)P;
  out.local22 = local_product(F, ap_system2({0, 1}, {0, 1}), P, q);
  out.local42 = local_product(F, ap_system2({0, 1, 2, 3}, {0, 1}), P, q);
  out.local4 = local_product(F, ap_system({0, 1, 2, 3}), P, q);

  for (const auto& pp : factorize(q)) {
    const i128 p = pp.p;
    const i128 D = lemma_curve(pp.p).delta;
    if (D == 0) out.supersingular = true;
    out.t22_q = out.t22_q * Rat(p, p * p + p + 1);
    out.t42_q = out.t42_q * Rat((p - D) * (p + 1) - D, p * p * (p + 1));
    // the squared-bias combination: (D+1)^2 p + D^2 + p^2 over (p+1)(p^2+p+1);
    // finite at D = 0 where the displayed product alone is singular
    out.t44_q = out.t44_q * Rat((D + 1) * (D + 1) * p + D * D + p * p, (p + 1) * (p * p + p + 1));
  }
  out.t22 = out.local22 * out.t22_q.to_double();
  out.t42 = out.local42 * out.t42_q.to_double();
  out.t44 = out.local4 * out.local4 * out.t44_q.to_double();
  if (out.supersingular)
    out.note = "vanishing-bias regime, t44 evaluated via the cancelled form";
  return out;
}

double msq_prediction(const MultFunc& f, u64 q, const SignPattern& eps, u64 P) {
  if (eps.m() != 4) throw std::invalid_argument("msq_prediction: pattern length must be 4");
  const TConstants t = t_constants(f, q, P);
  const double A = a_eps(f, q, eps, P);
  const double ps = (double)eps.pair_sum();
  return ((t.t44 - A * A) + 2.0 * (double)eps.product() * ps * t.t42 + ps * ps * t.t22) / 256.0;
}

double pindep_probe(const MultFunc& f, const DirichletChar& chi, u64 P, unsigned max_choices) {
  if (max_choices < 2) throw std::invalid_argument("pindep_probe: need at least two choices");
  std::vector<std::vector<int>> subs;
  for (unsigned mask = 0; mask < 16; mask++)
    if (std::popcount(mask) == 2) subs.push_back(subset_vec(mask));
  std::vector<std::pair<size_t, size_t>> choices;
  for (size_t i = 0; i < subs.size() && choices.size() < max_choices; i++)
    for (size_t j = 0; j < subs.size() && choices.size() < max_choices; j++)
      if ((i + j) % 3 == 0 || i == j) choices.emplace_back(i, j);

  const MultFunc F = TwistedFunc{f, chi, 0.0}.as_mult_func();
  const u64 q = chi.modulus();
  double first = 0, spread = 0;
  for (size_t c = 0; c < choices.size(); c++) {
    const double v =
        local_product(F, ap_system2(subs[choices[c].first], subs[choices[c].second]), P, q);
    if (c == 0)
      first = v;
    else
      spread = std::max(spread, std::abs(v - first));
  }
  return spread;
}

PatternCensus census(const MultFunc& f, u64 q, u64 x, u64 z, int m, DFilter filter,
                     double tolerance, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  if (m != 3 && m != 4) throw std::invalid_argument("census: m must be 3 or 4");
  if (z < 1 || z > x) throw std::invalid_argument("census: need 1 <= z <= x");
  if (filter != DFilter::all && q < 2)
    throw std::invalid_argument("census: a d-filter needs q >= 2");

  PatternCensus out;
  out.fname = f.name();
  out.q = q;
  out.x = x;
  out.z = z;
  out.m = m;
  out.filter = filter;
  out.tolerance = tolerance;

  const u64 range = x + (u64)(m - 1) * z;
  const auto s = sign_sieve(f, range, "census");

  for (u64 d = 1; d <= z; d++) {
    if (filter == DFilter::non_multiple && d % q == 0) continue;
    if (filter == DFilter::multiple && d % q != 0) continue;
    out.dlist.push_back(d);
  }
  if (out.dlist.empty()) throw std::invalid_argument("census: no differences pass the filter");

  const unsigned npat = 1u << m;
  out.counts.assign(out.dlist.size(), std::vector<u64>(npat, 0));

  auto scan = [&](size_t i) {
    const u64 d = out.dlist[i];
    auto& row = out.counts[i];
    if (m == 3) {
      for (u64 n = 1; n <= x; n++) {
        const unsigned b = (unsigned)(s[n] < 0) | (unsigned)(s[n + d] < 0) << 1 |
                           (unsigned)(s[n + 2 * d] < 0) << 2;
        row[b]++;
      }
    } else {
      for (u64 n = 1; n <= x; n++) {
        const unsigned b = (unsigned)(s[n] < 0) | (unsigned)(s[n + d] < 0) << 1 |
                           (unsigned)(s[n + 2 * d] < 0) << 2 |
                           (unsigned)(s[n + 3 * d] < 0) << 3;
        row[b]++;
      }
    }
    u64 tot = 0;
    for (u64 c : row) tot += c;
    if (tot != x) throw std::logic_error("census: partition failure");
  };

  unsigned nt = threads > 0 ? (unsigned)threads : std::thread::hardware_concurrency();
  nt = std::max(1u, std::min<unsigned>(nt, (unsigned)out.dlist.size()));
  if (nt == 1) {
    for (size_t i = 0; i < out.dlist.size(); i++) scan(i);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= out.dlist.size()) return;
        scan(i);
      }
    };
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < nt; i++) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  const double nd = (double)out.dlist.size(), xd = (double)x;
  out.mean.assign(npat, 0);
  out.variance.assign(npat, 0);
  for (unsigned pat = 0; pat < npat; pat++) {
    double mu = 0;
    for (const auto& row : out.counts) mu += (double)row[pat] / xd;
    mu /= nd;
    double var = 0;
    for (const auto& row : out.counts) {
      const double dev = (double)row[pat] / xd - mu;
      var += dev * dev;
    }
    out.mean[pat] = mu;
    out.variance[pat] = var / nd;
  }

  if (m == 3) {
    out.predicted.assign(npat, 0.125);
    out.note = "reference density 1/8 for non-pretentious f";
  } else if (q >= 5 && std::gcd(q, (u64)6) == 1 && squarefree(factorize(q))) {
    const BiasResult b = bias(f, q);
    out.tcon = t_constants(f, q);
    out.has_tconstants = true;
    out.predicted.assign(npat, 0);
    out.msq_predicted.assign(npat, 0);
    for (unsigned pat = 0; pat < npat; pat++) {
      const SignPattern e = SignPattern::from_index(pat, 4);
      const double A = (double)e.product() * b.curve_product * b.local_product;
      switch (filter) {
        case DFilter::all: out.predicted[pat] = (1.0 + A) / 16.0; break;
        case DFilter::non_multiple: out.predicted[pat] = 1.0 / 16.0; break;
        case DFilter::multiple: out.predicted[pat] = (1.0 + (double)q * A) / 16.0; break;
      }
      const double ps = (double)e.pair_sum();
      out.msq_predicted[pat] = ((out.tcon.t44 - A * A) +
                                2.0 * (double)e.product() * ps * out.tcon.t42 +
                                ps * ps * out.tcon.t22) /
                               256.0;
    }
    std::ostringstream os;
    os << "bias curve " << b.curve_product << ", local " << b.local_product << " (P=" << b.P
       << ", tail " << b.local_tail << ")";
    if (!b.sane) os << "; distance sanity warning D=" << b.dist;
    if (!b.verified_path) os << "; |f| < 1 on rad | q, outside the verified path";
    out.note = os.str();
  } else {
    out.note = "no prediction path for this (m, q)";
  }

  if (!out.predicted.empty()) {
    out.msq_left.assign(npat, 0);
    for (unsigned pat = 0; pat < npat; pat++) {
      double acc = 0;
      for (const auto& row : out.counts) {
        const double dev = (double)row[pat] / xd - out.predicted[pat];
        acc += dev * dev;
      }
      out.msq_left[pat] = acc / nd;
    }
  }

  out.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

i64 census_expansion_check(const MultFunc& f, u64 x, u64 z, int m) {
  if (m != 3 && m != 4) throw std::invalid_argument("census_expansion_check: m must be 3 or 4");
  if (z < 1 || z > x || x > 1'000'000)
    throw std::invalid_argument("census_expansion_check: need 1 <= z <= x <= 1e6");
  const u64 range = x + (u64)(m - 1) * z;
  const auto s = sign_sieve(f, range, "census_expansion_check");
  const unsigned npat = 1u << m;

  i64 worst = 0;
  std::vector<u64> row(npat);
  std::vector<i64> corr(npat);
  for (u64 d = 1; d <= z; d++) {
    std::fill(row.begin(), row.end(), 0);
    for (u64 n = 1; n <= x; n++) {
      unsigned b = 0;
      for (int j = 0; j < m; j++) b |= (unsigned)(s[n + (u64)j * d] < 0) << j;
      row[b]++;
    }
    // correlation sums C_S = sum_n prod_{j in S} f(n + j d)
    for (unsigned S = 0; S < npat; S++) {
      i64 c = 0;
      for (u64 n = 1; n <= x; n++) {
        int prod = 1;
        for (int j = 0; j < m; j++)
          if (S >> j & 1) prod *= s[n + (u64)j * d];
        c += prod;
      }
      corr[S] = c;
    }
    for (unsigned pat = 0; pat < npat; pat++) {
      const SignPattern e = SignPattern::from_index(pat, m);
      i64 acc = 0;
      for (unsigned S = 0; S < npat; S++) {
        int ep = 1;
        for (int j = 0; j < m; j++)
          if (S >> j & 1) ep *= e.eps[(size_t)j];
        acc += (i64)ep * corr[S];
      }
      if (acc % (i64)npat != 0)
        throw std::logic_error("census_expansion_check: expansion not divisible by 2^m");
      worst = std::max(worst, std::abs(acc / (i64)npat - (i64)row[pat]));
    }
  }
  return worst;
}

double basic_inequality_check(const std::vector<cplx>& a, const std::vector<cplx>& b,
                              const std::vector<double>& w, double X) {
  const size_t n = a.size();
  if (n == 0 || b.size() != n || w.size() != n)
    throw std::invalid_argument("basic_inequality_check: size mismatch");
  double H = 0;
  cplx sa = 0, sb = 0, sab = 0;
  for (size_t j = 0; j < n; j++) {
    if (!(w[j] > 0)) throw std::invalid_argument("basic_inequality_check: weights must be positive");
    if (std::abs(a[j]) > X + 1e-9 || std::abs(b[j]) > X + 1e-9)
      throw std::invalid_argument("basic_inequality_check: entries exceed the norm bound");
    H += w[j];
    sa += w[j] * a[j];
    sb += w[j] * b[j];
    sab += w[j] * a[j] * std::conj(b[j]);
  }
  const double A = std::abs(sa) / H, B = std::abs(sb) / H;
  const double rhs = ((A + B) * (A + B) / 2.0 - X) * H;
  return std::max(0.0, rhs - sab.real());
}

LogdensResult logdens_decomposition(const MultFunc& f, u64 d, u64 x) {
  if (d < 1 || x < 16) throw std::invalid_argument("logdens_decomposition: need d >= 1, x >= 16");
  const u64 range = x + 3 * d;
  const auto s = sign_sieve(f, range, "logdens_decomposition");

  LogdensResult out;
  size_t t = 0;
  for (int i = 0; i < 4; i++)
    for (int j = i + 1; j < 4; j++) out.pair_index[t++] = {i, j};
  out.pair_corr.fill(0);

  double c4 = 0;
  for (u64 n = 1; n <= x; n++) {
    const double inv = 1.0 / (double)n;
    const int v0 = s[n], v1 = s[n + d], v2 = s[n + 2 * d], v3 = s[n + 3 * d];
    const int v[4] = {v0, v1, v2, v3};
    for (size_t u = 0; u < 6; u++)
      out.pair_corr[u] += inv * v[out.pair_index[u][0]] * v[out.pair_index[u][1]];
    c4 += inv * v0 * v1 * v2 * v3;
  }
  const double lx = std::log((double)x);
  for (auto& c : out.pair_corr) c /= lx;
  out.c4 = c4 / lx;
  out.bound = (1.0 - std::abs(out.c4)) / 8.0;
  out.threshold_ok = std::abs(out.c4) > 1.0 / std::sqrt(2.0) + 1e-12 || out.bound > 1.0 / 28.0;
  return out;
}

}  // namespace multavg
