// Empirical averages and Gowers norms. The cyclic embedding uses a prime
// N > 2^k x so interval cube configurations never wrap; interval norms are
// ratio-normalized against the indicator, which makes the box identity exact
// up to rounding rather than an estimate with boundary defects.

#include "multavg/averages.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fftw3.h>

#include "multavg/arith.hpp"

namespace multavg {

namespace {

constexpr u64 kSieveCap = 1ull << 25;  // value-table size bound for bulk sieves

u64 next_prime_above(u64 n) {
  u64 c = n + 1;
  if (c <= 2) return 2;
  if (c % 2 == 0) c++;
  while (!is_prime_u64(c)) c += 2;
  return c;
}

// corner extremes of every form over the integer box [1, floor(x_i)]^l;
// affine, so extremes sit at corners
void corner_extremes(const FormSystem& sys, const BoxSpec& box, i128& lo, i128& hi) {
  lo = std::numeric_limits<i64>::max();
  hi = std::numeric_limits<i64>::min();
  for (const auto& fm : sys.forms) {
    i128 mn = fm.cst, mx = fm.cst;
    for (int i = 0; i < sys.l; i++) {
      const i64 n = (i64)std::floor(box.x[i]);
      if (n < 1) throw std::invalid_argument("empty box side");
      const i128 a = (i128)fm.coef[i], b = (i128)fm.coef[i] * n;
      mn += std::min(a, b);
      mx += std::max(a, b);
    }
    lo = std::min(lo, mn);
    hi = std::max(hi, mx);
  }
}

// Sum over signed shifts h in [-(x-1), x-1]^kh of |S(h)|^2 where S is the
// inner cube sum over n with alternating conjugation by subset parity. Values
// live on [1, x]; out-of-range factors kill the term, so this equals the full
// Z_N cube sum for any N > 2^(kh+1) x.
double cube_power_sum_interval(const std::vector<cplx>& vals, unsigned kh) {
  const i64 x = (i64)vals.size();
  const unsigned nsub = 1u << kh;
  std::vector<i64> h(kh, -(x - 1)), shift(nsub, 0);
  double out = 0;
  for (;;) {
    for (unsigned s = 1; s < nsub; s++) {
      i64 t = 0;
      for (unsigned i = 0; i < kh; i++)
        if (s >> i & 1) t += h[i];
      shift[s] = t;
    }
    cplx S = 0;
    for (i64 n = 1; n <= x; n++) {
      cplx prod = vals[n - 1];
      for (unsigned s = 1; s < nsub && prod != 0.0; s++) {
        const i64 idx = n + shift[s];
        if (idx < 1 || idx > x) {
          prod = 0;
          break;
        }
        const cplx v = vals[idx - 1];
        prod *= (std::popcount(s) & 1) ? std::conj(v) : v;
      }
      S += prod;
    }
    out += std::norm(S);
    unsigned i = 0;
    for (; i < kh; i++) {
      if (++h[i] <= x - 1) break;
      h[i] = -(x - 1);
    }
    if (i == kh) break;
  }
  return out;
}

// cyclic variant: shifts and positions run over all of Z_N
double cube_power_sum_cyclic(const std::vector<cplx>& g, unsigned kh) {
  const u64 N = g.size();
  const unsigned nsub = 1u << kh;
  std::vector<u64> h(kh, 0), shift(nsub, 0);
  double out = 0;
  for (;;) {
    for (unsigned s = 1; s < nsub; s++) {
      u64 t = 0;
      for (unsigned i = 0; i < kh; i++)
        if (s >> i & 1) t += h[i];
      shift[s] = t % N;
    }
    cplx S = 0;
    for (u64 n = 0; n < N; n++) {
      cplx prod = g[n];
      for (unsigned s = 1; s < nsub && prod != 0.0; s++) {
        u64 idx = n + shift[s];
        if (idx >= N) idx -= N;
        const cplx v = g[idx];
        prod *= (std::popcount(s) & 1) ? std::conj(v) : v;
      }
      S += prod;
    }
    out += std::norm(S);
    unsigned i = 0;
    for (; i < kh; i++) {
      if (++h[i] < N) break;
      h[i] = 0;
    }
    if (i == kh) break;
  }
  return out;
}

double root_2k(double v, unsigned k) {
  return std::pow(std::max(v, 0.0), 1.0 / (double)(1u << k));
}

void check_method_cost(u64 x, unsigned k, const std::string& method) {
  if (k < 2 || k > 5) throw std::invalid_argument("gowers_norm: k in [2,5]");
  if (method == "fft") {
    if (k != 2) throw std::invalid_argument("gowers_norm: fft path is k = 2 only");
    if (x > 20'000'000) throw std::domain_error("gowers_norm: fft size cap exceeded");
    return;
  }
  if (method != "direct") throw std::invalid_argument("gowers_norm: unknown method " + method);
  const double cost = std::pow(2.0 * (double)x - 1.0, (double)(k - 1)) * (double)x *
                      (double)(1u << (k - 1));
  if (cost > 4e9) throw std::domain_error("gowers_norm: direct cost cap; reduce x or k");
}

double fft_fourth_moment(const std::vector<cplx>& vals, u64 N) {
  std::vector<cplx> g(N, cplx(0.0)), out(N);
  for (u64 n = 1; n <= vals.size(); n++) g[n] = vals[n - 1];
  fftw_plan plan = fftw_plan_dft_1d((int)N, reinterpret_cast<fftw_complex*>(g.data()),
                                    reinterpret_cast<fftw_complex*>(out.data()),
                                    FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  double s = 0;
  for (const cplx& c : out) {
    const double a = std::norm(c);
    s += a * a;
  }
  const double Nd = (double)N;
  return s / (Nd * Nd * Nd * Nd);
}

}  // namespace

AverageResult brute_average(const std::vector<MultFunc>& f, const FormSystem& sys,
                            const BoxSpec& box, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const int k = sys.k(), l = sys.l;
  if ((int)f.size() != k) throw std::invalid_argument("brute_average: arity mismatch");
  if ((int)box.x.size() != l) throw std::invalid_argument("brute_average: box arity mismatch");

  i128 lo, hi;
  corner_extremes(sys, box, lo, hi);
  if (hi > (i128)kSieveCap) throw std::overflow_error("brute_average: sieve range overflow");
  const u64 vmax = hi < 1 ? 1 : (u64)hi;

  std::vector<i64> dim(l);
  u64 total = 1;
  for (int i = 0; i < l; i++) {
    dim[i] = (i64)std::floor(box.x[i]);
    if (total > 4'000'000'000ull / (u64)dim[i])
      throw std::domain_error("brute_average: lattice too large");
    total *= (u64)dim[i];
  }

  std::map<std::string, std::vector<cplx>> cache;
  std::vector<const std::vector<cplx>*> table(k);
  for (int j = 0; j < k; j++) {
    auto it = cache.find(f[j].name());
    if (it == cache.end()) it = cache.emplace(f[j].name(), f[j].bulk_eval(vmax)).first;
    table[j] = &it->second;
  }

  // chunk the last axis in fixed blocks so the fold order is thread-independent
  const int caxis = l - 1;
  const i64 block = std::max<i64>(1, (dim[caxis] + 255) / 256);
  const i64 nchunks = (dim[caxis] + block - 1) / block;
  std::vector<cplx> partial((size_t)nchunks, cplx(0.0));

  auto slab = [&](i64 clo, i64 chi) {
    cplx acc = 0;
    std::vector<i64> n(l, 1);
    std::vector<i64> base(k);
    n[caxis] = clo;
    for (;;) {
      for (int j = 0; j < k; j++) {
        i64 b = sys.forms[j].cst;
        for (int i = 1; i < l; i++) b += sys.forms[j].coef[i] * n[i];
        base[j] = b;
      }
      const i64 lim0 = l == 1 ? chi : dim[0] + 1;
      const i64 start0 = l == 1 ? clo : 1;
      for (i64 n0 = start0; n0 < lim0; n0++) {
        cplx prod = 1.0;
        for (int j = 0; j < k; j++) {
          const i64 v = base[j] + sys.forms[j].coef[0] * n0;
          if (v < 1) {
            prod = 0;
            break;
          }
          prod *= (*table[j])[(u64)v];
          if (prod == 0.0) break;
        }
        acc += prod;
      }
      if (l == 1) break;
      int i = 1;
      for (; i < l; i++) {
        const i64 cap = i == caxis ? chi - 1 : dim[i];
        if (++n[i] <= cap) break;
        n[i] = i == caxis ? clo : 1;
      }
      if (i == l) break;
    }
    return acc;
  };

  unsigned nt = threads > 0 ? (unsigned)threads : std::thread::hardware_concurrency();
  nt = std::max(1u, std::min<unsigned>(nt, (unsigned)nchunks));
  std::atomic<i64> next{0};
  auto worker = [&]() {
    for (;;) {
      const i64 c = next.fetch_add(1);
      if (c >= nchunks) return;
      const i64 clo = 1 + c * block;
      const i64 chi = std::min<i64>(dim[caxis], (c + 1) * block) + 1;
      partial[(size_t)c] = slab(clo, chi);
    }
  };
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < nt; i++) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  cplx sum = 0;
  for (const cplx& c : partial) sum += c;

  AverageResult out;
  out.value = sum / box.volume();
  out.samples = total;
  out.partition = "axis" + std::to_string(caxis) + "/" + std::to_string(block);
  out.provenance = run_provenance(f, sys, box);
  out.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

GowersResult gowers_norm(const std::vector<cplx>& vals, unsigned k, const std::string& method) {
  const u64 x = vals.size();
  if (x < 2) throw std::domain_error("gowers_norm: need x >= 2");
  check_method_cost(x, k, method);

  GowersResult out;
  out.k = k;
  out.x = x;
  out.N = next_prime_above(((u64)1 << k) * x);
  out.method = method;

  const double Nd = (double)out.N;
  double scale = Nd;
  for (unsigned i = 0; i < k; i++) scale *= Nd;  // N^(k+1)

  std::vector<cplx> ones(x, cplx(1.0));
  if (method == "fft") {
    out.raw = fft_fourth_moment(vals, out.N);
    out.raw_one = fft_fourth_moment(ones, out.N);
  } else {
    out.raw = cube_power_sum_interval(vals, k - 1) / scale;
    out.raw_one = cube_power_sum_interval(ones, k - 1) / scale;
  }
  out.value = root_2k(out.raw / out.raw_one, k);
  return out;
}

GowersResult gowers_norm(const MultFunc& f, u64 x, unsigned k, const std::string& method) {
  if (x < 2) throw std::domain_error("gowers_norm: need x >= 2");
  if (x > kSieveCap) throw std::overflow_error("gowers_norm: sieve range overflow");
  const auto table = f.bulk_eval(x);
  std::vector<cplx> vals(table.begin() + 1, table.end());
  return gowers_norm(vals, k, method);
}

double gowers_group_norm(const std::vector<cplx>& g, unsigned k) {
  const u64 N = g.size();
  if (N < 2) throw std::domain_error("gowers_group_norm: need N >= 2");
  if (k < 2 || k > 5) throw std::invalid_argument("gowers_group_norm: k in [2,5]");
  const double cost = std::pow((double)N, (double)k) * (double)(1u << (k - 1));
  if (cost > 4e9) throw std::domain_error("gowers_group_norm: cost cap; reduce N or k");
  double scale = (double)N;
  for (unsigned i = 0; i < k; i++) scale *= (double)N;
  return root_2k(cube_power_sum_cyclic(g, k - 1) / scale, k);
}

double gowers_identity_check(const std::vector<cplx>& vals, unsigned k) {
  const i64 x = (i64)vals.size();
  if (x < 2) throw std::domain_error("gowers_identity_check: need x >= 2");
  if (k < 2 || k > 5) throw std::invalid_argument("gowers_identity_check: k in [2,5]");
  const double cost =
      (double)x * std::pow(2.0 * (double)x + 1.0, (double)k) * (double)(1u << k);
  if (cost > 4e9) throw std::domain_error("gowers_identity_check: cost cap; reduce x or k");

  const auto gr = gowers_norm(vals, k, "direct");
  const double side1 = gr.raw / gr.raw_one;

  // independent route: walk the cube system over m in [1,x], h_i in [-x,x],
  // weight each form value by the system's conjugation parity
  const GowersSystem gs = gowers_system((int)k);
  const int nf = gs.system.k();
  auto eval_side = [&](bool use_vals) {
    double acc = 0;
    std::vector<i64> v((size_t)k + 1);
    std::vector<i64> h(k, -x);
    for (;;) {
      for (unsigned i = 0; i < k; i++) v[i] = h[i];
      for (i64 m = 1; m <= x; m++) {
        v[k] = m;
        cplx prod = 1.0;
        for (int j = 0; j < nf && prod != 0.0; j++) {
          const auto& fm = gs.system.forms[j];
          i64 val = fm.cst;
          for (unsigned i = 0; i <= k; i++) val += fm.coef[i] * v[i];
          if (val < 1 || val > x) {
            prod = 0;
            break;
          }
          if (use_vals) {
            const cplx c = vals[(u64)val - 1];
            prod *= (gs.conj_weight[(size_t)j] & 1) ? std::conj(c) : c;
          }
        }
        acc += prod.real();
      }
      unsigned i = 0;
      for (; i < k; i++) {
        if (++h[i] <= x) break;
        h[i] = -x;
      }
      if (i == k) break;
    }
    return acc;
  };
  const double num = eval_side(true);
  const double den = eval_side(false);
  const double side2 = num / den;
  return std::abs(side1 - side2);
}

CompareResult compare(const AverageResult& empirical, const MainTermReport& predicted,
                      double budget_multiplier) {
  if (!empirical.provenance.empty() && !predicted.provenance.empty() &&
      empirical.provenance != predicted.provenance)
    throw std::invalid_argument("compare: provenance mismatch: " + empirical.provenance +
                                " vs " + predicted.provenance);
  CompareResult out;
  out.diff = std::abs(empirical.value - predicted.assembled);
  out.budget = predicted.budget_total;
  out.multiplier = budget_multiplier;
  std::ostringstream os;
  os.precision(6);
  os << "diff " << out.diff << " vs budget " << out.budget << " x " << budget_multiplier;
  out.detail = os.str();
  if (out.budget > 0.5) {
    out.verdict = CompareResult::Verdict::inconclusive;
    out.detail += " (budget vacuous)";
  } else {
    out.verdict = out.diff <= budget_multiplier * out.budget ? CompareResult::Verdict::pass
                                                             : CompareResult::Verdict::fail;
  }
  return out;
}

TkResult tk_check(const MultFunc& f, const AffineForm& form, const BoxSpec& box) {
  const int l = box.l();
  if ((int)form.coef.size() != l) throw std::invalid_argument("tk_check: arity mismatch");
  FormSystem sys;
  sys.l = l;
  sys.forms = {form};
  i128 lo, hi;
  corner_extremes(sys, box, lo, hi);
  if (hi > (i128)kSieveCap) throw std::overflow_error("tk_check: sieve range overflow");
  const u64 vmax = hi < 2 ? 2 : (u64)hi;

  const auto mom = additive_moments(f, (double)vmax);
  const cplx mu = mom.mu;

  // additive bulk values h(n) = sum over p^a || n of (f(p^a) - 1)
  const SpfSieve sieve(vmax);
  std::vector<cplx> hval(vmax + 1, cplx(0.0));
  for (u64 n = 2; n <= vmax; n++) {
    const u64 p = sieve.spf(n);
    u64 m = n;
    unsigned a = 0;
    while (m % p == 0) {
      m /= p;
      a++;
    }
    hval[n] = hval[m] + (f.pp(p, a) - 1.0);
  }

  std::vector<i64> dim(l);
  u64 total = 1;
  for (int i = 0; i < l; i++) {
    dim[i] = (i64)std::floor(box.x[i]);
    if (dim[i] < 1) throw std::invalid_argument("tk_check: empty box side");
    if (total > 2'000'000'000ull / (u64)dim[i])
      throw std::domain_error("tk_check: lattice too large");
    total *= (u64)dim[i];
  }
  double acc = 0;
  std::vector<i64> n(l, 1);
  for (;;) {
    i64 v = form.cst;
    for (int i = 0; i < l; i++) v += form.coef[i] * n[i];
    if (v >= 1) acc += std::norm(hval[(u64)v] - mu);
    int i = 0;
    for (; i < l; i++) {
      if (++n[i] <= dim[i]) break;
      n[i] = 1;
    }
    if (i == l) break;
  }

  TkResult out;
  out.lhs = acc / box.volume();
  out.rhs = mom.sigma2 + std::abs(mu) / box.x_minus();
  out.ratio = (out.lhs < 1e-300 && out.rhs < 1e-300) ? 0.0 : out.lhs / out.rhs;
  out.range = (double)vmax;
  return out;
}

double gvn_excess(const std::vector<std::vector<cplx>>& f) {
  if (f.size() != 3) throw std::invalid_argument("gvn_excess: need three sequences");
  const u64 N = f[0].size();
  if (N < 3 || f[1].size() != N || f[2].size() != N)
    throw std::invalid_argument("gvn_excess: sequences must share a length >= 3");
  cplx S = 0;
  for (u64 n = 0; n < N; n++)
    for (u64 d = 0; d < N; d++) {
      const u64 a = (n + d) % N, b = (n + 2 * d) % N;
      S += f[0][n] * f[1][a] * f[2][b];
    }
  const double avg = std::abs(S) / ((double)N * (double)N);
  double mn = std::numeric_limits<double>::infinity();
  for (int j = 0; j < 3; j++) mn = std::min(mn, gowers_group_norm(f[j], 2));
  return avg - mn;
}

GvnResult gvn_check(u64 N, unsigned trials, u64 seed) {
  if (!is_prime_u64(N) || N < 3) throw std::domain_error("gvn_check: N must be an odd prime");
  if (N > 2048) throw std::domain_error("gvn_check: N cap exceeded");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GvnResult out;
  out.N = N;
  out.trials = trials;
  out.max_excess = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<cplx>> f(3, std::vector<cplx>(N));
  for (unsigned t = 0; t < trials; t++) {
    for (int j = 0; j < 3; j++)
      for (u64 n = 0; n < N; n++) {
        switch (t % 3) {
          case 0: {  // unimodular phases
            const double th = 2 * 3.14159265358979323846 * unit(rng);
            f[j][n] = cplx(std::cos(th), std::sin(th));
            break;
          }
          case 1:  // random signs
            f[j][n] = unit(rng) < 0.5 ? -1.0 : 1.0;
            break;
          default: {  // uniform on the unit disc
            const double r = std::sqrt(unit(rng));
            const double th = 2 * 3.14159265358979323846 * unit(rng);
            f[j][n] = r * cplx(std::cos(th), std::sin(th));
          }
        }
      }
    out.max_excess = std::max(out.max_excess, gvn_excess(f));
  }
  return out;
}

double rf_diagnostic(double dist_sq, double x, const RfParams& params) {
  if (!(x > 1.0)) throw std::domain_error("rf_diagnostic: need x > 1");
  if (dist_sq < 0) throw std::domain_error("rf_diagnostic: negative distance square");
  return std::exp(-params.c1 * dist_sq) + std::pow(std::log(x), -params.c2);
}

}  // namespace multavg
