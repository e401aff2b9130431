// Local and archimedean factors of the main term. One valuation-structured
// engine backs Algorithm A, the singular-series prime factors and the a-sum
// W-factors: affine congruence densities over Z/p^m are exactly p^{-c} or 0,
// so every divisibility density is an exact small rational and subtree tails
// are certified by the divisibility density at the subtree root.

#include "multavg/local.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "multavg/lattice.hpp"

namespace multavg {

namespace {

constexpr double kUlp = 2.2e-16;

unsigned vp_u64(u64 n, u64 p) {
  unsigned v = 0;
  while (n && n % p == 0) {
    n /= p;
    v++;
  }
  return v;
}

unsigned vp_i128(i128 n, u64 p) {
  unsigned v = 0;
  while (n != 0 && n % (i128)p == 0) {
    n /= (i128)p;
    v++;
  }
  return v;
}

FormSystem homogenized(const FormSystem& sys) {
  FormSystem h = sys;
  for (auto& f : h.forms) f.cst = 0;
  return h;
}

bool rad_divides(u64 a, u64 q) {
  if (a == 0) return false;
  for (auto& pp : factorize(a))
    if (q % pp.p != 0) return false;
  return true;
}

void check_engine_shape(const FormSystem& sys, const char* who) {
  if (sys.k() < 1 || sys.k() > 6 || sys.l < 1 || sys.l > 3)
    throw std::invalid_argument(std::string(who) +
                                ": exact engine handles 1..6 forms in 1..3 variables");
  for (auto& f : sys.forms)
    if (f.degenerate()) throw std::invalid_argument(std::string(who) + ": degenerate form");
}

// weight oracle per coordinate; nullptr denotes the constant weight 1
using WeightVec = std::vector<std::function<cplx(unsigned)>>;

// ---- valuation-structured sums ----------------------------------------------
// Sums D(nu) prod_j w_j(nu_j) over valuation vectors nu >= base in the
// canonical (non-decreasing increment index) enumeration, where
// D(nu) = density{v_p(L_j(n)) = nu_j for all j} via inclusion-exclusion on the
// divisibility densities g(nu) = density{p^{nu_j} | L_j(n) for all j}.
// Since sum_{mu >= nu} D(mu) = g(nu) and |w| <= 1, pruning the subtree at nu
// forfeits at most g(nu); g itself is exact (p^{-c} or 0) through crt_count.

struct VSum {
  const FormSystem* sys;
  u64 p;
  double log2p;
  unsigned k;
  std::vector<unsigned> content;  // v_p of row content, constant included
  std::map<std::vector<unsigned>, Rat> gcache;
  u64 budget = 5'000'000;

  VSum(const FormSystem& s, u64 prime) : sys(&s), p(prime) {
    log2p = std::log2((double)p);
    k = (unsigned)s.forms.size();
    for (auto& f : s.forms) {
      i64 g = std::abs(f.cst);
      for (i64 c : f.coef) g = std::gcd(g, std::abs(c));
      content.push_back(g == 0 ? 0u : vp_u64((u64)g, p));
    }
  }

  double apriori(const std::vector<unsigned>& nu) const {
    double worst = 0;  // exponent of the best single-coordinate bound
    for (unsigned j = 0; j < k; j++) {
      double e = (double)nu[j] - (double)content[j];
      worst = std::max(worst, e);
    }
    return std::pow((double)p, -worst);
  }

  // exact evaluation is safe while the reduced denominator p^c keeps
  // c <= min(sum nu, l * max nu) within the i128 budget; the lifted modulus
  // p^top must also leave room for residue products inside the reduction
  bool safe_exact(const std::vector<unsigned>& nu) const {
    unsigned total = 0, top = 0;
    for (unsigned v : nu) {
      total += v;
      top = std::max(top, v);
    }
    if ((double)top * log2p > 60.0) return false;
    double bits = std::min((double)total, (double)sys->l * (double)top) * log2p;
    return bits <= 120.0;
  }

  Rat g(const std::vector<unsigned>& nu) {
    auto it = gcache.find(nu);
    if (it != gcache.end()) return it->second;
    std::vector<Congruence> rows;
    for (unsigned j = 0; j < k; j++) {
      if (nu[j] == 0) continue;
      Congruence c;
      c.coef = sys->forms[j].coef;
      c.cst = sys->forms[j].cst;
      c.r = 0;
      c.m = pow_checked(p, nu[j]);
      rows.push_back(std::move(c));
    }
    Rat d = rows.empty() ? Rat(1) : crt_count(rows, sys->l).density;
    gcache.emplace(nu, d);
    return d;
  }

  struct Run {
    cplx value{0.0, 0.0};
    double pruned = 0;
    u64 nodes = 0;
    bool budget_hit = false;
  };

  void dfs(const WeightVec& w, std::vector<unsigned>& nu, unsigned minj, unsigned total,
           unsigned cap, double delta, Run& run) {
    if (!safe_exact(nu)) {
      run.pruned += apriori(nu);
      return;
    }
    // the DFS subtree at nu is a sub-cone of {mu >= nu}, whose pattern masses
    // telescope to g(nu) <= apriori(nu); pruning on g keeps the accounting tight
    double gv = g(nu).to_double();
    if (gv < delta) {
      run.pruned += gv;
      return;
    }
    if (run.nodes >= budget) {
      run.budget_hit = true;
      run.pruned += gv;
      return;
    }
    run.nodes++;
    Rat D(0);
    double dropped = 0;
    const double eps_term = delta / double(1u << (k + 2));
    std::vector<unsigned> mu(nu);
    for (unsigned mask = 0; mask < (1u << k); mask++) {
      mu = nu;
      int bits = 0;
      for (unsigned j = 0; j < k; j++)
        if (mask >> j & 1) {
          mu[j]++;
          bits++;
        }
      double apm = apriori(mu);
      if ((mask != 0 && apm < eps_term) || !safe_exact(mu)) {
        dropped += apm;
        continue;
      }
      Rat gm = g(mu);
      D = (bits % 2 == 0) ? D + gm : D - gm;
    }
    run.pruned += dropped;
    cplx wp = 1.0;
    for (unsigned j = 0; j < k; j++)
      if (w[j]) wp *= (nu[j] == 0 ? cplx(1.0, 0.0) : w[j](nu[j]));
    run.value += D.to_double() * wp;
    if (total >= cap) {
      run.pruned += gv;
      return;
    }
    for (unsigned j = minj; j < k; j++) {
      nu[j]++;
      dfs(w, nu, j, total + 1, cap, delta, run);
      nu[j]--;
    }
  }

  struct Result {
    cplx value{0.0, 0.0};
    double bracket = 0;
    u64 nodes = 0;
    bool converged = true;
  };

  Result evaluate(const WeightVec& w, const std::vector<unsigned>& base, unsigned depth,
                  double tol) {
    unsigned total0 = 0;
    for (unsigned b : base) total0 += b;
    unsigned cap = total0 + depth;
    double delta = tol / 16;
    Run run;
    for (int attempt = 0;; attempt++) {
      run = Run{};
      std::vector<unsigned> nu(base);
      dfs(w, nu, 0, total0, cap, delta, run);
      if (run.pruned <= tol * 0.5 || attempt >= 4 || run.budget_hit) break;
      delta /= 256;
    }
    Result r;
    r.value = run.value;
    r.bracket = run.pruned + (double)run.nodes * double(1u << k) * kUlp;
    r.nodes = run.nodes;
    r.converged = !run.budget_hit && r.bracket <= tol;
    return r;
  }
};

// certified product accumulation: value *= v with |error| <= br propagated
void interval_mul(cplx& value, double& bracket, cplx v, double br) {
  bracket = std::abs(value) * br + std::abs(v) * bracket + bracket * br;
  value *= v;
}

// ---- Algorithm B: residue class sweep ---------------------------------------
// Exact average over Z_p^l of prod_j f_j(p^{v_p(L_j(n))}): sweep classes
// n = n0 + p^s m; classes where every form has valuation < s are resolved,
// the rest recurse on (value/p^s, same coefficients) with sigma += s.  A lone
// unresolved primitive-content form yields the geometric valuation law.

struct BEngine {
  u64 p;
  const std::vector<MultFunc>* f;
  unsigned m_max;
  unsigned sweep_log2;
  bool feasible = true;
  u64 classes = 0;

  struct BForm {
    std::vector<i64> coef;
    i128 cst = 0;
    unsigned j = 0;
    unsigned sigma = 0;
  };

  cplx weight(unsigned j, unsigned e) const {
    return e == 0 ? cplx(1.0, 0.0) : (*f)[j].pp(p, e);
  }

  struct Out {
    cplx avg{0.0, 0.0};
    double bracket = 0;
  };

  Out conditional(const std::vector<BForm>& forms, int l2, unsigned swept) {
    Out out;
    if (swept >= m_max) {
      out.bracket = 1.0;
      return out;
    }
    const double per = (double)l2 * std::log2((double)p);
    if (per > 24.0) {  // a single sweep level would already be too large
      feasible = false;
      out.bracket = 1.0;
      return out;
    }
    unsigned s = std::max(1u, (unsigned)((double)sweep_log2 / per));
    s = std::min(s, m_max - swept);
    const u64 ps = pow_checked(p, s);
    const u64 cells = pow_checked(p, s * (unsigned)l2);
    const double cell_w = 1.0 / (double)cells;
    std::vector<u64> n0(l2, 0);
    for (u64 cell = 0; cell < cells; cell++) {
      cplx resolved = 1.0;
      std::vector<BForm> open;
      for (auto& bf : forms) {
        i128 v = bf.cst;
        for (int i = 0; i < l2; i++) v += (i128)bf.coef[i] * (i128)n0[i];
        unsigned wv = (v == 0) ? s : vp_i128(v, p);
        if (wv >= s) {
          BForm nf;
          nf.coef = bf.coef;
          nf.cst = v / (i128)ps;
          nf.j = bf.j;
          nf.sigma = bf.sigma + s;
          open.push_back(std::move(nf));
        } else {
          resolved *= weight(bf.j, bf.sigma + wv);
        }
      }
      if (open.empty()) {
        out.avg += cell_w * resolved;
      } else if (open.size() == 1) {
        auto& uf = open[0];
        u64 g = 0;
        for (i64 c : uf.coef) g = std::gcd(g, (u64)std::abs(c));
        const unsigned e = vp_u64(g, p);  // g != 0: forms are nondegenerate
        const unsigned vc = (uf.cst == 0) ? UINT32_MAX : vp_i128(uf.cst, p);
        if (vc < e) {
          out.avg += cell_w * resolved * weight(uf.j, uf.sigma + vc);
        } else {
          cplx series = 0.0;
          const double geo = 1.0 - 1.0 / (double)p;
          double pk = 1.0;
          for (unsigned tt = 0; tt <= 60; tt++) {
            series += weight(uf.j, uf.sigma + e + tt) * geo * pk;
            pk /= (double)p;
          }
          out.avg += cell_w * resolved * series;
          out.bracket += cell_w * std::abs(resolved) * pk;
        }
      } else {
        Out sub = conditional(open, l2, swept + s);
        out.avg += cell_w * resolved * sub.avg;
        out.bracket += cell_w * std::abs(resolved) * sub.bracket;
      }
      int d = 0;
      while (d < l2 && ++n0[d] == ps) {
        n0[d] = 0;
        d++;
      }
      if (d == l2) break;
    }
    classes += cells;
    return out;
  }
};

}  // namespace

// ---- omega_L ----------------------------------------------------------------

u64 omega_L(const AffineForm& form, unsigned l, u64 p, unsigned k) {
  if (form.degenerate() || !form.primitive())
    throw std::domain_error("omega_L: form must be primitive");
  if (form.coef.size() != l) throw std::invalid_argument("omega_L: arity mismatch");
  if ((double)k * std::log2((double)p) > 62.0)
    throw std::invalid_argument("omega_L: p^k too large");
  if (k == 0) return 1;
  ModSystem ms;
  ms.mod = pow_checked(p, k);
  ms.l = (int)l;
  ms.A.push_back(std::vector<i128>(form.coef.begin(), form.coef.end()));
  ms.b.push_back(-(i128)form.cst);
  Rat d = mod_solution_density(ms);
  if (d.num == 0) return 0;
  // d = 1/p^c exactly; count = p^{kl - c}
  unsigned c = vp_i128(d.den, p);
  double bits = ((double)k * l - c) * std::log2((double)p);
  if (bits > 62.0) throw std::overflow_error("omega_L: count does not fit");
  return pow_checked(p, k * l - c);
}

// ---- local averages ---------------------------------------------------------

LocalAverageResult local_average(const std::vector<MultFunc>& f, const FormSystem& sys,
                                 u64 p, const LocalParams& params) {
  if ((int)f.size() != sys.k())
    throw std::invalid_argument("local_average: one function per form");
  check_engine_shape(sys, "local_average");
  if (!is_prime_u64(p)) throw std::invalid_argument("local_average: p must be prime");
  if (params.tol <= 0) throw std::invalid_argument("local_average: tol must be positive");
  if (params.nu_max == 1) throw std::invalid_argument("local_average: nu_max must be >= 2");

  VSum engine(sys, p);
  WeightVec w;
  for (auto& fj : f)
    w.push_back([&fj, p](unsigned nu) { return fj.pp(p, nu); });
  const unsigned depth = params.nu_max ? params.nu_max : 200;
  auto a = engine.evaluate(w, std::vector<unsigned>(f.size(), 0), depth, params.tol);

  LocalAverageResult out;
  out.value = a.value;
  out.bracket = a.bracket;
  out.converged = a.converged;
  out.nodes = a.nodes;
  out.value_b = a.value;
  if (params.dual) {
    std::vector<std::vector<i128>> H(sys.k(), std::vector<i128>(sys.l));
    for (int j = 0; j < sys.k(); j++)
      for (int i = 0; i < sys.l; i++) H[j][i] = sys.forms[j].coef[i];
    std::vector<std::vector<i128>> V;
    int r = hermite_col_reduce(H, V);
    BEngine be{p, &f, params.m_max, params.sweep_log2};
    std::vector<BEngine::BForm> bforms(sys.k());
    for (int j = 0; j < sys.k(); j++) {
      bforms[j].coef.resize(r);
      for (int i = 0; i < r; i++) {
        if (H[j][i] > (i128)INT64_MAX || H[j][i] < (i128)INT64_MIN)
          throw std::overflow_error("local_average: reduced coefficients overflow");
        bforms[j].coef[i] = (i64)H[j][i];
      }
      bforms[j].cst = sys.forms[j].cst;
      bforms[j].j = (unsigned)j;
      bforms[j].sigma = 0;
    }
    auto b = be.conditional(bforms, std::max(r, 1), 0);
    if (be.feasible) {
      out.value_b = b.avg;
      out.bracket_b = b.bracket + (double)be.classes * 4 * kUlp;
      out.dual_ran = true;
    }
  }
  return out;
}

// ---- Euler factor -----------------------------------------------------------

cplx euler_factor(const MultFunc& f, double y, double x) {
  if (!(2.0 <= y && y <= x)) throw std::invalid_argument("euler_factor: need 2 <= y <= x");
  const auto& primes = prime_table((u64)std::floor(x));
  cplx prod = 1.0;
  for (u64 p : primes) {
    if ((double)p <= y || (double)p > x) continue;
    cplx inner = 1.0;
    double pk = 1.0;
    for (unsigned k = 1; pk > 1e-18; k++) {
      pk /= (double)p;
      inner += f.pp(p, k) * pk;
    }
    prod *= (1.0 - 1.0 / (double)p) * inner;
  }
  return prod;
}

// ---- character factor -------------------------------------------------------

namespace {

// unit-normalized local factor at p: sums prod_j chi_{j,p}(phi_j) over the
// distinct tuples phi_j = L_j(n)/p^{A_j} mod p^{e_j} with p^{A_j} | L_j(n);
// the caller multiplies conj(chi_{j,p}(a_j/p^{A_j})) to restore division by a_j
cplx xi_local_prime(u64 p, const std::vector<unsigned>& A,
                    const std::vector<DirichletChar>& chi, const FormSystem& sys) {
  const unsigned k = (unsigned)A.size();
  std::vector<unsigned> e(k);
  unsigned E = 0;
  for (unsigned j = 0; j < k; j++) {
    e[j] = vp_u64(chi[j].modulus(), p);
    E = std::max(E, A[j] + e[j]);
  }
  if (E == 0) return 1.0;
  if ((double)E * std::log2((double)p) > 62.0)
    throw std::overflow_error("char_factor: local level too large");
  const u64 pE = pow_checked(p, E);

  ModSolutionSet sol;
  {
    ModSystem ms;
    ms.mod = pE;
    ms.l = sys.l;
    for (unsigned j = 0; j < k; j++) {
      if (A[j] == 0) continue;
      const u64 lift = pow_checked(p, E - A[j]);
      std::vector<i128> row(sys.l);
      for (int i = 0; i < sys.l; i++) row[i] = (i128)sys.forms[j].coef[i] * (i128)lift;
      ms.A.push_back(std::move(row));
      ms.b.push_back(-(i128)sys.forms[j].cst * (i128)lift);
    }
    if (ms.A.empty()) {
      sol.solvable = true;
      sol.base.assign(sys.l, 0);
      for (int i = 0; i < sys.l; i++) {
        std::vector<i128> st(sys.l, 0);
        st[i] = 1;
        sol.step.push_back(std::move(st));
        sol.order.push_back(pE);
      }
    } else {
      sol = mod_solve(ms);
      if (!sol.solvable) return 0.0;
    }
  }

  std::vector<unsigned> J;  // coordinates carrying a character component at p
  u64 total = 1;
  for (unsigned j = 0; j < k; j++)
    if (e[j] >= 1) {
      J.push_back(j);
      total = mul_checked(total, pow_checked(p, e[j]));
    }
  if (J.empty()) return 1.0;
  if (total > 20'000'000)
    throw std::overflow_error("char_factor: local tuple space too large");

  std::vector<u64> pe(J.size()), stride(J.size());
  u64 acc = 1;
  for (size_t s = 0; s < J.size(); s++) {
    pe[s] = pow_checked(p, e[J[s]]);
    stride[s] = acc;
    acc *= pe[s];
  }

  // phi image of an affine point (hom = false) or a lattice step (hom = true)
  auto image = [&](const std::vector<i128>& v, bool hom) {
    std::vector<u64> out(J.size());
    for (size_t s = 0; s < J.size(); s++) {
      const unsigned j = J[s];
      const u64 mod_full = pow_checked(p, A[j] + e[j]);
      i128 val = hom ? (i128)0 : (i128)sys.forms[j].cst;
      for (int i = 0; i < sys.l; i++) val += (i128)sys.forms[j].coef[i] * v[i];
      val %= (i128)mod_full;
      if (val < 0) val += (i128)mod_full;
      const u64 pa = pow_checked(p, A[j]);
      if ((u64)val % pa != 0)
        throw std::logic_error("char_factor: image not divisible as promised");
      out[s] = ((u64)val / pa) % pe[s];
    }
    return out;
  };

  const std::vector<u64> phi0 = image(sol.base, false);
  std::vector<std::vector<u64>> psi;
  for (auto& st : sol.step) psi.push_back(image(st, true));

  auto pack = [&](const std::vector<u64>& phi) {
    u64 idx = 0;
    for (size_t s = 0; s < J.size(); s++) idx += phi[s] * stride[s];
    return idx;
  };

  std::vector<char> seen(total, 0);
  std::vector<std::vector<u64>> frontier{phi0};
  seen[pack(phi0)] = 1;
  cplx sum = 0.0;
  while (!frontier.empty()) {
    std::vector<u64> cur = std::move(frontier.back());
    frontier.pop_back();
    cplx prod = 1.0;
    for (size_t s = 0; s < J.size(); s++) prod *= chi[J[s]].component_value(p, cur[s]);
    sum += prod;
    for (auto& step : psi) {
      std::vector<u64> nxt(J.size());
      for (size_t s = 0; s < J.size(); s++) nxt[s] = (cur[s] + step[s]) % pe[s];
      u64 idx = pack(nxt);
      if (!seen[idx]) {
        seen[idx] = 1;
        frontier.push_back(std::move(nxt));
      }
    }
  }
  return sum;
}

void check_char_args(const std::vector<u64>& a, const std::vector<DirichletChar>& chi,
                     const FormSystem& sys, const char* who) {
  if ((int)a.size() != sys.k() || (int)chi.size() != sys.k())
    throw std::invalid_argument(std::string(who) + ": need one a_j and chi_j per form");
  for (int j = 0; j < sys.k(); j++)
    if (!rad_divides(a[j], chi[j].modulus()))
      throw std::domain_error(std::string(who) + ": rad(a_j) must divide q_j");
}

}  // namespace

cplx char_factor_enumerate(const std::vector<u64>& a, const std::vector<DirichletChar>& chi,
                           const FormSystem& sys, u64 enum_cap) {
  check_char_args(a, chi, sys, "char_factor_enumerate");
  const int k = sys.k(), l = sys.l;
  u64 M = 1;
  for (int j = 0; j < k; j++) {
    const u64 m = mul_checked(a[j], chi[j].modulus());
    i128 big = (i128)(M / std::gcd(M, m)) * (i128)m;
    if (big > (i128)enum_cap)
      throw std::domain_error(
          "char_factor_enumerate: M^l exceeds the enumeration cap; reduce the moduli or "
          "use char_factor's factored path");
    M = (u64)big;
  }
  u128 space = 1;
  for (int i = 0; i < l; i++) {
    space *= M;
    if (space > (u128)enum_cap)
      throw std::domain_error(
          "char_factor_enumerate: M^l exceeds the enumeration cap; reduce the moduli or "
          "use char_factor's factored path");
  }

  u128 qspace = 1;
  bool flat = true;
  std::vector<u64> qstride(k, 1);
  for (int j = 0; j < k; j++) {
    qstride[j] = (u64)qspace;
    qspace *= chi[j].modulus();
    if (qspace > (u128)100'000'000ULL) flat = false;
  }
  std::vector<char> seen_flat;
  if (flat) seen_flat.assign((size_t)qspace, 0);
  std::set<std::vector<u64>> seen_set;

  std::vector<i64> n(l, 0);
  std::vector<u64> b(k);
  cplx sum = 0.0;
  while (true) {
    bool ok = true;
    for (int j = 0; j < k && ok; j++) {
      const i64 v = sys.forms[j].eval(n);
      if (v % (i64)a[j] != 0) {
        ok = false;
        break;
      }
      const i64 w = v / (i64)a[j];
      const i64 q = (i64)chi[j].modulus();
      b[j] = (u64)((w % q + q) % q);
    }
    if (ok) {
      bool fresh;
      if (flat) {
        u64 idx = 0;
        for (int j = 0; j < k; j++) idx += b[j] * qstride[j];
        fresh = !seen_flat[idx];
        seen_flat[idx] = 1;
      } else {
        fresh = seen_set.insert(b).second;
      }
      if (fresh) {
        cplx prod = 1.0;
        for (int j = 0; j < k; j++) prod *= chi[j].value(b[j]);
        sum += prod;
      }
    }
    int d = 0;
    while (d < l && (u64)++n[d] == M) {
      n[d] = 0;
      d++;
    }
    if (d == l) break;
  }
  return sum;
}

cplx char_factor(const std::vector<u64>& a, const std::vector<DirichletChar>& chi,
                 const FormSystem& sys, u64 enum_cap) {
  check_char_args(a, chi, sys, "char_factor");
  const int k = sys.k();
  bool small = true;
  {
    i128 M = 1;
    for (int j = 0; j < k && small; j++) {
      const i128 m = (i128)a[j] * (i128)chi[j].modulus();
      M = M / gcd_i128(M, m) * m;
      if (M > (i128)enum_cap) small = false;
    }
    if (small) {
      i128 space = 1;
      for (int i = 0; i < sys.l && small; i++) {
        space *= M;
        if (space > (i128)enum_cap) small = false;
      }
    }
    if (small) return char_factor_enumerate(a, chi, sys, enum_cap);
  }
  // factored path: prod over p of the unit-normalized local factor, times the
  // character values restoring the division by the unit part of a_j
  std::set<u64> ps;
  for (int j = 0; j < k; j++)
    for (auto& pp : factorize(chi[j].modulus())) ps.insert(pp.p);
  cplx xi = 1.0;
  for (u64 p : ps) {
    std::vector<unsigned> A(k);
    for (int j = 0; j < k; j++) A[j] = vp_u64(a[j], p);
    cplx loc = xi_local_prime(p, A, chi, sys);
    for (int j = 0; j < k; j++) {
      const unsigned e = vp_u64(chi[j].modulus(), p);
      if (e == 0) continue;
      const u64 pe = pow_checked(p, e);
      const u64 unit = (a[j] / pow_checked(p, A[j])) % pe;
      loc *= std::conj(chi[j].component_value(p, unit));
    }
    xi *= loc;
  }
  return xi;
}

// ---- archimedean integral ---------------------------------------------------

namespace {

struct GLRule {
  std::vector<double> x, w;  // on [0, 1]
};

const GLRule& gl_rule(unsigned n) {
  static std::map<unsigned, GLRule> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GLRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (unsigned i = 0; i < n; i++) {
    double z = std::cos(M_PI * ((double)i + 0.75) / ((double)n + 0.5));
    for (int iter = 0; iter < 100; iter++) {
      double p0 = 1.0, p1 = z;
      for (unsigned j = 2; j <= n; j++) {
        double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / (double)j;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (z * p1 - p0) / (z * z - 1.0);
      double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    double p0 = 1.0, p1 = z;
    for (unsigned j = 2; j <= n; j++) {
      double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / (double)j;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (z * p1 - p0) / (z * z - 1.0);
    r.x[i] = (z + 1.0) / 2.0;
    r.w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

// mean of prod_j L_j(u)^{i t_j} over the box [0, x_1] x ... x [0, x_l], with
// panels geometrically graded toward the faces where a form can vanish
cplx box_mean(const std::vector<AffineForm>& forms, const std::vector<double>& t,
              const std::vector<double>& x, unsigned order, unsigned levels) {
  const int l = (int)x.size();
  const int k = (int)forms.size();
  std::vector<char> grade_hi(l, 0);
  for (auto& f : forms)
    for (int i = 0; i < l; i++)
      if (f.coef[i] < 0) grade_hi[i] = 1;

  const GLRule& gl = gl_rule(order);
  std::vector<std::vector<double>> xs(l), ws(l);
  for (int i = 0; i < l; i++) {
    std::vector<std::pair<double, double>> panels;  // (lo, hi) in units of x[i]
    double lo = 0.0;
    for (unsigned j = levels; j >= 1; j--) {
      double hi = std::ldexp(1.0, -(int)(j - 1));
      panels.push_back({lo, hi});
      lo = hi;
    }
    if (grade_hi[i]) {
      // split each panel's mirror image toward the upper face as well
      std::vector<std::pair<double, double>> two;
      for (auto& pr : panels) two.push_back({pr.first / 2, pr.second / 2});
      for (size_t j = panels.size(); j-- > 0;)
        two.push_back({1.0 - panels[j].second / 2, 1.0 - panels[j].first / 2});
      panels = std::move(two);
    }
    for (auto& pr : panels) {
      const double a = pr.first * x[i], b = pr.second * x[i];
      for (unsigned g = 0; g < order; g++) {
        xs[i].push_back(a + (b - a) * gl.x[g]);
        ws[i].push_back((b - a) / x[i] * gl.w[g]);
      }
    }
  }

  std::vector<size_t> idx(l, 0);
  cplx sum = 0.0;
  while (true) {
    double wt = 1.0;
    for (int i = 0; i < l; i++) wt *= ws[i][idx[i]];
    double phase = 0.0;
    for (int j = 0; j < k; j++) {
      if (t[j] == 0.0) continue;
      double v = (double)forms[j].cst;
      for (int i = 0; i < l; i++) v += (double)forms[j].coef[i] * xs[i][idx[i]];
      phase += t[j] * std::log(std::max(v, 1e-300));
    }
    sum += wt * cplx(std::cos(phase), std::sin(phase));
    int d = 0;
    while (d < l && ++idx[d] == xs[d].size()) {
      idx[d] = 0;
      d++;
    }
    if (d == l) break;
  }
  return sum;
}

}  // namespace

ArchIntegralResult arch_integral(const BoxSpec& box, const FormSystem& sys,
                                 const std::vector<double>& t, const QuadParams& qp) {
  if ((int)t.size() != sys.k())
    throw std::invalid_argument("arch_integral: need one t_j per form");
  if ((int)box.x.size() != sys.l) throw std::invalid_argument("arch_integral: box arity mismatch");
  for (double xv : box.x)
    if (!(xv > 0)) throw std::invalid_argument("arch_integral: box scales must be positive");
  for (auto& f : sys.forms) {
    double lo = (double)f.cst;
    for (int i = 0; i < sys.l; i++) lo += std::min(0.0, (double)f.coef[i] * box.x[i]);
    if (lo < 0) throw std::domain_error("arch_integral: form changes sign on the box");
  }

  ArchIntegralResult out;
  out.equal_scales = true;
  for (double xv : box.x)
    if (std::abs(xv - box.x[0]) > 1e-12 * box.x[0]) out.equal_scales = false;
  double T = 0;
  bool zero_t = true;
  for (double tv : t) {
    T += tv;
    if (tv != 0.0) zero_t = false;
  }
  if (out.equal_scales) out.scale_phase = std::exp(cplx(0.0, T * std::log(box.x[0])));
  if (zero_t) {
    out.value = 1.0;
    out.homogeneous = 1.0;
    out.err_estimate = 0;
    out.converged = true;
    return out;
  }

  unsigned levels = (unsigned)std::ceil(std::log2(10.0 / qp.tol));
  levels = std::min(levels, 4 * std::max(qp.max_level, 1u));
  unsigned order = qp.order;
  if (sys.l >= 3) {
    levels = std::min(levels, 14u);
    order = std::min(order, 8u);
  }

  cplx coarse = box_mean(sys.forms, t, box.x, order, levels);
  cplx fine = box_mean(sys.forms, t, box.x, order + 4, levels);
  out.value = fine;
  out.err_estimate = std::abs(fine - coarse);
  out.converged = out.err_estimate <= qp.tol;

  if (out.equal_scales) {
    std::vector<AffineForm> hom = sys.forms;
    for (auto& f : hom) f.cst = 0;
    std::vector<double> unit(sys.l, 1.0);
    out.homogeneous = box_mean(hom, t, unit, order + 4, levels);
  }
  return out;
}

// ---- divisor densities ------------------------------------------------------

Rat density_R(const std::vector<u64>& m, const FormSystem& sys) {
  if ((int)m.size() != sys.k()) throw std::invalid_argument("density_R: arity mismatch");
  std::vector<Congruence> rows;
  for (int j = 0; j < sys.k(); j++) {
    if (m[j] == 0) throw std::invalid_argument("density_R: moduli must be positive");
    if (m[j] == 1) continue;
    Congruence c;
    c.coef = sys.forms[j].coef;
    c.cst = sys.forms[j].cst;
    c.r = 0;
    c.m = m[j];
    rows.push_back(std::move(c));
  }
  if (rows.empty()) return Rat(1);
  return crt_count(rows, sys.l).density;
}

Rat density_Rad(const std::vector<u64>& a, const std::vector<u64>& d, const FormSystem& sys,
                const std::vector<u64>& q, const std::vector<i64>& u,
                const std::vector<i64>& v) {
  const int k = sys.k();
  if ((int)a.size() != k || (int)d.size() != k || (int)q.size() != k || (int)u.size() != k ||
      (int)v.size() != k)
    throw std::invalid_argument("density_Rad: arity mismatch");
  std::vector<Congruence> rows;
  for (int j = 0; j < k; j++) {
    if (a[j] == 0 || d[j] == 0 || q[j] == 0)
      throw std::invalid_argument("density_Rad: moduli must be positive");
    {
      const u64 m1 = mul_checked(a[j], q[j]);
      i128 r = (i128)a[j] * (i128)u[j] % (i128)m1;
      if (r < 0) r += (i128)m1;
      Congruence c;
      c.coef = sys.forms[j].coef;
      c.cst = sys.forms[j].cst;
      c.r = (i64)r;
      c.m = m1;
      rows.push_back(std::move(c));
    }
    {
      const u64 m2 = mul_checked(a[j], d[j]);
      i128 r = (i128)v[j] % (i128)m2;
      if (r < 0) r += (i128)m2;
      Congruence c;
      c.coef = sys.forms[j].coef;
      c.cst = sys.forms[j].cst;
      c.r = (i64)r;
      c.m = m2;
      rows.push_back(std::move(c));
    }
  }
  return crt_count(rows, sys.l).density;
}

// ---- singular series --------------------------------------------------------

SingularSeriesResult singular_series(const std::vector<u64>& a, double y,
                                     const std::vector<MultFunc>& f, const FormSystem& sys,
                                     const std::vector<DirichletChar>& chi,
                                     const std::vector<double>& t,
                                     const LocalParams& params) {
  const int k = sys.k();
  if ((int)a.size() != k || (int)f.size() != k || (int)chi.size() != k || (int)t.size() != k)
    throw std::invalid_argument("singular_series: arity mismatch");
  if (y < 2) throw std::invalid_argument("singular_series: need y >= 2");
  check_engine_shape(sys, "singular_series");
  for (int j = 0; j < k; j++)
    if (!rad_divides(a[j], chi[j].modulus()))
      throw std::domain_error("singular_series: rad(a_j) must divide q_j");

  std::vector<MultFunc> F;
  for (int j = 0; j < k; j++) F.push_back(TwistedFunc{f[j], chi[j], t[j]}.as_mult_func());
  const FormSystem hsys = homogenized(sys);

  std::set<u64> pset;
  for (u64 p : prime_table((u64)std::floor(y))) {
    if ((double)p > y) break;
    pset.insert(p);
  }
  for (int j = 0; j < k; j++)
    for (auto& pp : factorize(chi[j].modulus())) pset.insert(pp.p);

  cplx val = 1.0;
  double br = 0;
  for (u64 p : pset) {
    VSum engine(hsys, p);
    std::vector<unsigned> base(k, 0);
    WeightVec w(k);
    for (int j = 0; j < k; j++) {
      base[j] = vp_u64(a[j], p) + vp_u64(chi[j].modulus(), p);
      if (chi[j].modulus() % p != 0) {
        const MultFunc& Fj = F[j];
        w[j] = [&Fj, p](unsigned nu) { return Fj.pp(p, nu); };
      }
    }
    auto res = engine.evaluate(w, base, 200, params.tol);
    interval_mul(val, br, res.value, res.bracket);
  }

  SingularSeriesResult out;
  out.unnormalized = val;
  std::vector<u64> qa(k);
  for (int j = 0; j < k; j++) qa[j] = mul_checked(a[j], chi[j].modulus());
  out.normalizer = density_R(qa, sys);
  if (out.normalizer.num == 0) {
    out.divergent = true;
    out.value = 0.0;
    out.tail_bound = br;
  } else {
    const double R = out.normalizer.to_double();
    out.value = val / R;
    out.tail_bound = br / std::abs(R);
  }
  return out;
}

// ---- main term --------------------------------------------------------------

namespace {

// per-prime exponent box of the a-sum with certified bounds: kept alpha
// vectors, their W and Xi factors, and the neglected mass
struct PrimeBox {
  u64 p = 2;
  std::vector<unsigned> idx;                 // j with p | q_j
  std::vector<unsigned> e;                   // v_p(q_j), full length k
  std::vector<unsigned> cj;                  // v_p of form content, full length k
  unsigned emax = 0;
  unsigned cmax = 0;
  double ximax = 1;                          // bound on |Xi^{(p)}|
  std::vector<std::vector<unsigned>> alpha;  // kept exponent vectors, full length k
  std::vector<double> bound;                 // a-priori bound per kept alpha
  std::vector<cplx> W;
  std::vector<double> Wbr;
  std::vector<cplx> xi;   // unit-normalized local char factor
  std::vector<Rat> ginh;  // inhomogeneous divisibility density at alpha + e
  double tail = 0;        // certified neglected bound mass within this box
  double crude_sum = 0;   // analytic bound on the full box sum of bounds
};

}  // namespace

std::string run_provenance(const std::vector<MultFunc>& f, const FormSystem& sys,
                           const BoxSpec& box) {
  std::ostringstream os;
  os.precision(15);
  for (size_t j = 0; j < f.size(); j++) os << (j ? "," : "") << f[j].name();
  os << "|" << sys.str() << "|";
  for (size_t i = 0; i < box.x.size(); i++) os << (i ? "," : "") << box.x[i];
  return os.str();
}

MainTermReport main_term(const std::vector<MultFunc>& f, const std::vector<DirichletChar>& chi,
                         const std::vector<double>& t, const FormSystem& sys,
                         const BoxSpec& box, double y, const MainTermParams& params) {
  const int k = sys.k(), l = sys.l;
  if ((int)f.size() != k || (int)chi.size() != k || (int)t.size() != k)
    throw std::invalid_argument("main_term: arity mismatch");
  check_engine_shape(sys, "main_term");
  if ((int)box.x.size() != l) throw std::invalid_argument("main_term: box arity mismatch");
  {
    auto rep = validate_system(sys);
    if (!rep.ok) throw std::invalid_argument("main_term: " + rep.message);
  }
  const i64 A = std::max<i64>(2, system_height(sys));
  if (!box.appropriate(A, params.B))
    throw std::domain_error("main_term: box is not (A,B)-appropriate");
  double X = 1.0;
  for (double xv : box.x) X += xv;
  u64 qmax = 1;
  for (auto& c : chi) qmax = std::max(qmax, c.modulus());
  if (!(y >= 2 && (double)qmax < y && y <= X))
    throw std::invalid_argument("main_term: need 2 <= y, max q_j < y <= X");
  const double AX = (double)A * X;

  MainTermReport rep;
  rep.y = y;
  rep.A = (double)A;
  rep.B = params.B;
  rep.Bprime = std::min(1.0, params.B / 2.0);
  rep.X = X;
  rep.AX = AX;
  rep.x_minus = box.x_minus();
  rep.provenance = run_provenance(f, sys, box);

  rep.equal_moduli = true;
  for (int j = 0; j < k; j++)
    if (chi[j].modulus() != chi[0].modulus() || t[j] != t[0]) rep.equal_moduli = false;

  std::vector<MultFunc> F;
  for (int j = 0; j < k; j++) F.push_back(TwistedFunc{f[j], chi[j], t[j]}.as_mult_func());
  const FormSystem hsys = homogenized(sys);
  const double ltol = params.local.tol;

  std::vector<u64> qprimes;
  {
    std::set<u64> ps;
    for (auto& c : chi)
      for (auto& pp : factorize(c.modulus())) ps.insert(pp.p);
    qprimes.assign(ps.begin(), ps.end());
  }
  auto divides_q = [&](u64 p) {
    for (u64 qp : qprimes)
      if (qp == p) return true;
    return false;
  };

  // archimedean factor
  rep.arch = arch_integral(box, sys, t, params.quad);

  // Euler products of M_p(F, L): general branch over y < p <= AX; the
  // equal-moduli branch extends over p <= y with p coprime to q
  double euler_bracket_equal = 0;
  {
    const auto& primes = prime_table((u64)std::floor(AX));
    cplx epg = 1.0, epe = 1.0;
    double brg = 0, bre = 0;
    for (u64 p : primes) {
      if ((double)p > AX) break;
      const bool beyond_y = (double)p > y;
      if (!beyond_y && (!rep.equal_moduli || divides_q(p))) continue;
      VSum engine(sys, p);
      WeightVec w(k);
      for (int j = 0; j < k; j++) {
        const MultFunc& Fj = F[j];
        w[j] = [&Fj, p](unsigned nu) { return Fj.pp(p, nu); };
      }
      auto res = engine.evaluate(w, std::vector<unsigned>(k, 0), 200, ltol);
      if (beyond_y) {
        interval_mul(epg, brg, res.value, res.bracket);
        rep.euler_primes++;
      }
      if (rep.equal_moduli && !divides_q(p)) interval_mul(epe, bre, res.value, res.bracket);
    }
    rep.euler_product_general = epg;
    rep.euler_bracket = brg;
    if (rep.equal_moduli) {
      rep.euler_product_equal = epe;
      euler_bracket_equal = bre;
    }
    rep.notes += "euler brackets: general " + std::to_string(brg) +
                 (rep.equal_moduli ? ", equal " + std::to_string(bre) : std::string()) + "; ";
  }

  // homogeneous V factors over p <= y, p coprime to q (a-independent part of
  // the cancelled d-sum R * S_a)
  cplx vprod = 1.0;
  double vbr = 0;
  for (u64 p : prime_table((u64)std::floor(y))) {
    if ((double)p > y) break;
    if (divides_q(p)) continue;
    VSum engine(hsys, p);
    WeightVec w(k);
    for (int j = 0; j < k; j++) {
      const MultFunc& Fj = F[j];
      w[j] = [&Fj, p](unsigned nu) { return Fj.pp(p, nu); };
    }
    auto res = engine.evaluate(w, std::vector<unsigned>(k, 0), 200, ltol);
    interval_mul(vprod, vbr, res.value, res.bracket);
  }

  // per-prime exponent boxes
  std::vector<PrimeBox> boxes;
  for (u64 p : qprimes) {
    PrimeBox pb;
    pb.p = p;
    pb.e.assign(k, 0);
    pb.cj.assign(k, 0);
    for (int j = 0; j < k; j++) {
      pb.e[j] = vp_u64(chi[j].modulus(), p);
      if (pb.e[j] >= 1) pb.idx.push_back(j);
      i64 g = std::abs(sys.forms[j].cst);
      for (i64 c : sys.forms[j].coef) g = std::gcd(g, std::abs(c));
      pb.cj[j] = g == 0 ? 0u : vp_u64((u64)g, p);
    }
    for (unsigned j : pb.idx) {
      pb.ximax *= std::pow((double)p, (double)pb.e[j]);
      pb.emax = std::max(pb.emax, pb.e[j]);
      pb.cmax = std::max(pb.cmax, pb.cj[j]);
    }
    boxes.push_back(std::move(pb));
  }

  // a-priori bound on max(g_hom, g_inhom)(alpha + e) * ximax: a form of content
  // p^c divisible by p^E confines n to density at most p^{-(E-c)}
  auto apriori_bound = [&](const PrimeBox& pb, const std::vector<unsigned>& alpha) {
    double best = 0;
    for (unsigned j : pb.idx)
      best = std::max(best, (double)(alpha[j] + pb.e[j]) - (double)pb.cj[j]);
    return pb.ximax * std::pow((double)pb.p, -best);
  };

  // analytic bound on the sum of apriori_bound over the discarded region
  // {alpha : bound < below}; below <= 0 sums the whole grid.  Stratified by
  // M = max_j alpha_j: on the stratum, bound <= ximax p^{cmax - M} and
  // bound >= ximax p^{-(M + emax)}, with at most kp (M+1)^{kp-1} points.
  auto crude_region_sum = [&](const PrimeBox& pb, double below) {
    const unsigned kp = (unsigned)pb.idx.size();
    if (kp == 0) return 0.0;
    const double lp = std::log((double)pb.p);
    const double lead = pb.ximax * std::pow((double)pb.p, (double)pb.cmax);
    double total = 0;
    for (unsigned M = 0; M < 4000; M++) {
      if (below > 0 && pb.ximax * std::exp(-((double)M + pb.emax) * lp) >= below) continue;
      const double cnt = (double)kp * std::pow((double)M + 1.0, (double)kp - 1);
      const double term = lead * cnt * std::exp(-(double)M * lp);
      total += term;
      if (term < total * 1e-9 && M > 60) break;
    }
    return total;
  };

  for (auto& pb : boxes) pb.crude_sum = crude_region_sum(pb, 0.0);

  const double tol_a = params.tol;
  double theta_scale = 1.0;
  bool trunc_ok = false;
  for (int round = 0; round < 4 && !trunc_ok; round++) {
    for (auto& pb : boxes) {
      pb.alpha.clear();
      pb.bound.clear();
      pb.tail = 0;
    }
    for (size_t bi = 0; bi < boxes.size(); bi++) {
      PrimeBox& pb = boxes[bi];
      double kout = 1.0;
      for (size_t bo = 0; bo < boxes.size(); bo++)
        if (bo != bi) kout *= std::max(boxes[bo].crude_sum, 1.0);
      const double theta =
          tol_a * theta_scale / (2.0 * (double)boxes.size() * std::max(kout, 1.0));
      // enumerate kept alphas: the bound is non-increasing in every coordinate,
      // so a prefix below theta closes its whole subtree
      std::vector<unsigned> alpha(k, 0);
      std::function<void(size_t)> enumerate = [&](size_t pos) {
        if (pos == pb.idx.size()) {
          pb.alpha.push_back(alpha);
          pb.bound.push_back(apriori_bound(pb, alpha));
          return;
        }
        const unsigned j = pb.idx[pos];
        for (unsigned v = 0;; v++) {
          if (v > 200) throw std::runtime_error("main_term: a-sum truncation failure");
          alpha[j] = v;
          if (apriori_bound(pb, alpha) < theta) break;
          enumerate(pos + 1);
        }
        alpha[j] = 0;
      };
      enumerate(0);
      pb.tail = crude_region_sum(pb, theta);
      if (pb.alpha.size() > 200'000)
        throw std::runtime_error("main_term: a-sum truncation failure");
    }
    double neglect = 0;
    for (size_t bi = 0; bi < boxes.size(); bi++) {
      double rest = 1.0;
      for (size_t bo = 0; bo < boxes.size(); bo++)
        if (bo != bi) rest *= std::max(boxes[bo].crude_sum, 1.0);
      neglect += boxes[bi].tail * rest;
    }
    if (neglect <= tol_a)
      trunc_ok = true;
    else
      theta_scale *= 1e-3;
  }
  if (!trunc_ok && !boxes.empty())
    throw std::runtime_error("main_term: a-sum truncation failure");

  // order each box by decreasing bound so the product walk can cut suffixes
  for (auto& pb : boxes) {
    std::vector<size_t> ord(pb.alpha.size());
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](size_t u1, size_t u2) {
      if (pb.bound[u1] != pb.bound[u2]) return pb.bound[u1] > pb.bound[u2];
      return pb.alpha[u1] < pb.alpha[u2];
    });
    std::vector<std::vector<unsigned>> na;
    std::vector<double> nb;
    for (size_t o : ord) {
      na.push_back(std::move(pb.alpha[o]));
      nb.push_back(pb.bound[o]);
    }
    pb.alpha = std::move(na);
    pb.bound = std::move(nb);
  }

  // evaluate W, Xi and the inhomogeneous densities per kept alpha
  for (auto& pb : boxes) {
    VSum whom(hsys, pb.p);
    VSum winh(sys, pb.p);
    for (auto& alpha : pb.alpha) {
      std::vector<unsigned> base(k, 0);
      WeightVec w(k);
      for (int j = 0; j < k; j++) {
        base[j] = alpha[j] + pb.e[j];
        if (pb.e[j] == 0) {
          const MultFunc& Fj = F[j];
          const u64 p = pb.p;
          w[j] = [&Fj, p](unsigned nu) { return Fj.pp(p, nu); };
        }
      }
      auto res = whom.evaluate(w, base, 200, ltol);
      pb.W.push_back(res.value);
      pb.Wbr.push_back(res.bracket);
      pb.xi.push_back(xi_local_prime(pb.p, alpha, chi, sys));
      pb.ginh.push_back(winh.g(base));
    }
  }

  // assemble the a-sum over the product of kept per-prime boxes
  std::vector<size_t> pick(boxes.size(), 0);
  // suffix products of per-box bound sums for cut accounting
  std::vector<double> suffix_sum(boxes.size() + 1, 1.0);
  for (size_t bi = boxes.size(); bi-- > 0;) {
    double s = boxes[bi].tail;
    for (double b : boxes[bi].bound) s += b;
    suffix_sum[bi] = suffix_sum[bi + 1] * std::max(s, 1e-300);
  }
  const double theta_glob = tol_a * 1e-3 / std::max(1.0, (double)boxes.size());

  cplx asum_general = 0.0, asum_equal = 0.0;
  double asum_abs = 0.0, asum_err = 0.0;
  double cut_mass = 0.0;

  std::function<void(size_t, double)> emit = [&](size_t bi, double prefix_bound) {
    if (bi == boxes.size()) {
      // materialize the a-vector and its factors
      std::vector<u64> a(k, 1);
      cplx wprod = vprod;
      double werr = vbr;
      cplx xiprod = 1.0;
      Rat R(1);
      for (size_t bo = 0; bo < boxes.size(); bo++) {
        const PrimeBox& pb = boxes[bo];
        const auto& alpha = pb.alpha[pick[bo]];
        for (unsigned j : pb.idx) a[j] = mul_checked(a[j], pow_checked(pb.p, alpha[j]));
        interval_mul(wprod, werr, pb.W[pick[bo]], pb.Wbr[pick[bo]]);
        xiprod *= pb.xi[pick[bo]];
        R = R * pb.ginh[pick[bo]];
      }
      // unit corrections: divide by the unit part of a_j inside each local factor
      for (size_t bo = 0; bo < boxes.size(); bo++) {
        const PrimeBox& pb = boxes[bo];
        for (unsigned j : pb.idx) {
          const u64 pe = pow_checked(pb.p, pb.e[j]);
          const u64 unit = (a[j] / pow_checked(pb.p, pb.alpha[pick[bo]][j])) % pe;
          xiprod *= std::conj(chi[j].component_value(pb.p, unit));
        }
      }
      cplx fw = 1.0;
      for (int j = 0; j < k; j++) {
        fw *= f[j].eval(a[j]);
        if (t[j] != 0.0 && a[j] > 1)
          fw *= std::exp(cplx(0.0, -t[j] * std::log((double)a[j])));
      }
      ATermReport at;
      at.a = a;
      at.f_weight = fw;
      at.density = R;
      at.xi = xiprod;
      const cplx dsum = fw * xiprod * wprod;  // includes vprod
      at.singular = R.num == 0 ? cplx(0.0, 0.0) : wprod / R.to_double();
      const cplx term_general = dsum;
      const cplx term_equal = fw * R.to_double() * xiprod;
      at.term = rep.equal_moduli ? term_equal : term_general;
      asum_general += term_general;
      asum_equal += term_equal;
      asum_abs += std::abs(rep.equal_moduli ? term_equal : term_general);
      asum_err += std::abs(fw) * std::abs(xiprod) * werr;
      rep.a_terms.push_back(std::move(at));
      return;
    }
    const PrimeBox& pb = boxes[bi];
    for (size_t en = 0; en < pb.alpha.size(); en++) {
      const double b = prefix_bound * pb.bound[en];
      if (b * suffix_sum[bi + 1] < theta_glob) {
        // entries are enumerated in a fixed order; account the remaining mass
        double rest = 0;
        for (size_t e2 = en; e2 < pb.alpha.size(); e2++) rest += pb.bound[e2];
        cut_mass += prefix_bound * rest * suffix_sum[bi + 1];
        break;
      }
      pick[bi] = en;
      emit(bi + 1, b);
    }
    // the per-box tail also multiplies the current prefix
    cut_mass += prefix_bound * pb.tail * suffix_sum[bi + 1];
  };
  emit(0, 1.0);
  if (boxes.empty()) {
    // no character primes: the a-sum is a single all-ones vector
    ATermReport at;
    at.a.assign(k, 1);
    cplx fw = 1.0;
    for (int j = 0; j < k; j++) fw *= f[j].eval(1);
    at.f_weight = fw;
    at.density = Rat(1);
    at.xi = 1.0;
    at.singular = vprod;
    at.term = rep.equal_moduli ? fw : fw * vprod;
    asum_general = fw * vprod;
    asum_equal = fw;
    asum_abs = std::abs(at.term);
    asum_err = vbr;
    rep.a_terms.push_back(std::move(at));
  }

  std::sort(rep.a_terms.begin(), rep.a_terms.end(),
            [](const ATermReport& x1, const ATermReport& x2) { return x1.a < x2.a; });

  double ep_cap = std::max(std::abs(rep.euler_product_general) + rep.euler_bracket, 1.0);
  if (rep.equal_moduli)
    ep_cap = std::max(ep_cap, std::abs(rep.euler_product_equal) + euler_bracket_equal);
  rep.a_tail_bound = cut_mass * std::max(std::abs(vprod) + vbr, 1.0) + asum_err;
  rep.a_tail_bound *= (std::abs(rep.arch.value) + rep.arch.err_estimate) * ep_cap;

  rep.general_branch = asum_general * rep.arch.value * rep.euler_product_general;
  if (rep.equal_moduli)
    rep.equal_branch = asum_equal * rep.arch.value * rep.euler_product_equal;
  rep.assembled = rep.equal_moduli ? rep.equal_branch : rep.general_branch;

  // Euler factors of the pretentious comparison
  for (int j = 0; j < k; j++) rep.p_factors.push_back(euler_factor(F[j], y, AX));

  // error budget, absolute constants suppressed
  rep.budget_rel_logy = 1.0 / std::log(y);
  {
    double dist = 0;
    for (int j = 0; j < k; j++) {
      double qfac = 1.0;
      for (auto& pp : factorize(chi[j].modulus()))
        qfac /= 1.0 - 1.0 / std::sqrt((double)pp.p);
      const DirichletChar cj = chi[j];
      const double tj = t[j];
      MultFunc target("chi-twist", true, [cj, tj](u64 p, unsigned kk) {
        cplx v = cj.value(powmod_u64(p % cj.modulus(), kk, cj.modulus()));
        if (tj != 0.0) v *= std::exp(cplx(0.0, tj * (double)kk * std::log((double)p)));
        return v;
      });
      dist += qfac * (distance_star(f[j], target, y, AX) +
                      std::pow(std::log(X), -rep.Bprime));
    }
    rep.budget_distance = dist;
  }
  {
    // sum over rad(a_j) | q_j of 1/lcm(a): per prime 1 + sum_{M>=1}
    // ((M+1)^{s_p} - M^{s_p}) p^{-M}, s_p = #{j : p | q_j}
    double lcm_sum = 1.0;
    for (auto& pb : boxes) {
      const double sp = (double)pb.idx.size();
      double s = 1.0;
      for (unsigned M = 1; M < 500; M++) {
        const double term = (std::pow((double)M + 1.0, sp) - std::pow((double)M, sp)) *
                            std::pow((double)pb.p, -(double)M);
        s += term;
        if (term < 1e-18) break;
      }
      lcm_sum *= s;
    }
    double qt = 1.0;
    for (int j = 0; j < k; j++) qt *= (double)chi[j].modulus() * std::max(1.0, std::abs(t[j]));
    const double e3 = std::exp(3.0 * (double)k * y / std::log(y));
    rep.budget_xminus = (rep.A + e3 * lcm_sum * qt) / rep.x_minus +
                        std::pow(std::log(y), 2.0) / std::sqrt(y);
  }
  rep.budget_total = std::abs(rep.assembled) * rep.budget_rel_logy + rep.budget_distance +
                     rep.budget_xminus;

  rep.notes += rep.equal_moduli ? "equal-moduli branch assembled" : "general branch assembled";
  (void)asum_abs;
  return rep;
}

}  // namespace multavg
