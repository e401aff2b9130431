#pragma once
// Local factors of the main term: p-adic local averages (two independent
// algorithms with certified brackets), Euler factors, character sums over
// admissible residue tuples, archimedean integrals, divisor densities,
// singular series, and the main-term assembler with its error budget.

#include <map>
#include <string>
#include <vector>

#include "multavg/arith.hpp"
#include "multavg/base.hpp"
#include "multavg/forms.hpp"
#include "multavg/multfunc.hpp"
#include "multavg/rational.hpp"

namespace multavg {

struct LocalParams {
  unsigned nu_max = 0;        // per-prime valuation cap; 0 = widest word-size-safe cap
  double tol = 1e-10;         // certified bracket target per local average
  unsigned m_max = 24;        // recursion depth cap for the class-sweep algorithm
  unsigned sweep_log2 = 18;   // class sweep bounded by p^{l s} <= 2^sweep_log2
  bool dual = true;           // run both algorithms
};

// count of b in (Z/p^k Z)^l with L(b) = 0 (mod p^k); equals p^{k(l-1)} for
// primitive forms
u64 omega_L(const AffineForm& form, unsigned l, u64 p, unsigned k);

struct LocalAverageResult {
  cplx value;          // structured-sum algorithm (A)
  double bracket = 0;  // certified absolute error bound for A
  cplx value_b;        // class-sweep algorithm (B); only when dual
  double bracket_b = 0;
  bool dual_ran = false;
  bool converged = true;
  u64 nodes = 0;  // valuation vectors visited by A
};

// M_p(f, L): the p-adic local average of prod_j f_{j,p}(L_j(n))
LocalAverageResult local_average(const std::vector<MultFunc>& f, const FormSystem& sys,
                                 u64 p, const LocalParams& params = {});

// P(f; y, x) = prod_{y<p<=x} (1 - 1/p)(1 + sum_{k>=1} f(p^k) p^{-k})
cplx euler_factor(const MultFunc& f, double y, double x);

// Xi_a(chi, L): sum of prod_j chi_j(b_j) over the distinct tuples (b_j mod q_j)
// attained as b_j = L_j(n)/a_j (mod q_j) with a_j | L_j(n) for all j, each
// tuple counted once
cplx char_factor(const std::vector<u64>& a, const std::vector<DirichletChar>& chi,
                 const FormSystem& sys, u64 enum_cap = 2'000'000);
// direct-enumeration reference; throws when M^l exceeds the cap
cplx char_factor_enumerate(const std::vector<u64>& a, const std::vector<DirichletChar>& chi,
                           const FormSystem& sys, u64 enum_cap = 2'000'000);

struct QuadParams {
  double tol = 1e-8;
  unsigned max_level = 7;  // panel cap: up to 4*max_level graded panels per axis
  unsigned order = 12;     // Gauss-Legendre nodes per panel per axis
};

struct ArchIntegralResult {
  cplx value;               // I(x, L, t)
  double err_estimate = 0;  // last refinement difference
  bool converged = true;
  bool equal_scales = false;
  cplx scale_phase = 1.0;  // x^{iT} when all box scales coincide
  cplx homogeneous = 1.0;  // I(L, t), the scale-1 integral, when equal scales
};

ArchIntegralResult arch_integral(const BoxSpec& box, const FormSystem& sys,
                                 const std::vector<double>& t, const QuadParams& qp = {});

// R(m_1..m_k): density of n with m_j | L_j(n) for all j; exact
Rat density_R(const std::vector<u64>& m, const FormSystem& sys);
// R_{a,d}(L; u, v): density of n with L_j(n)/a_j = u_j (mod q_j) and
// L_j(n) = v_j (mod a_j d_j); exact
Rat density_Rad(const std::vector<u64>& a, const std::vector<u64>& d,
                const FormSystem& sys, const std::vector<u64>& q,
                const std::vector<i64>& u, const std::vector<i64>& v);

struct SingularSeriesResult {
  cplx value;               // S_a(y; f, L), normalized by R(q_1 a_1,...,q_k a_k)
  cplx unnormalized;        // the d-sum itself
  Rat normalizer;           // R(q_1 a_1, ..., q_k a_k)
  double tail_bound = 0;    // certified truncation bound for the d-sum
  bool divergent = false;   // normalizer vanished
};

SingularSeriesResult singular_series(const std::vector<u64>& a, double y,
                                     const std::vector<MultFunc>& f, const FormSystem& sys,
                                     const std::vector<DirichletChar>& chi,
                                     const std::vector<double>& t,
                                     const LocalParams& params = {});

struct MainTermParams {
  double B = 2.0;                  // appropriateness exponent
  double tol = 1e-9;               // a-sum truncation target
  LocalParams local;               // local-average controls
  QuadParams quad;                 // archimedean quadrature controls
  double budget_multiplier = 10.0; // comparison slack on the budget brackets
};

struct ATermReport {
  std::vector<u64> a;
  cplx f_weight;    // prod_j f_j(a_j) a_j^{-i t_j}
  Rat density;      // R(q_1 a_1, ..., q_k a_k)
  cplx xi;          // Xi_a
  cplx singular;    // S_a, the truncated d-sum divided by R
  cplx term;        // the a-term of the assembled branch, archimedean factor excluded
};

struct MainTermReport {
  cplx assembled;          // the branch value matching the moduli pattern
  cplx equal_branch = 0;   // (sum_a f R Xi) * I * prod_{p<=AX, p∤q} M_p(F,L)
  cplx general_branch = 0; // (sum_a f R Xi S_a) * I * prod_{y<p<=AX} M_p(F,L)
  bool equal_moduli = false;

  std::vector<ATermReport> a_terms;
  double a_tail_bound = 0;  // certified bound on the neglected a-vectors

  ArchIntegralResult arch;           // I(x, L, t) and its split
  cplx euler_product_equal = 1.0;    // prod over p <= AX, p coprime to q
  cplx euler_product_general = 1.0;  // prod over y < p <= AX
  double euler_bracket = 0;          // accumulated local-average brackets
  u64 euler_primes = 0;
  std::vector<cplx> p_factors;       // P(F_j; y, AX) per form

  // budget brackets, evaluated without the suppressed absolute constants:
  // relative 1/log y; the distance bracket; the x_- bracket with (log y)^2/sqrt(y)
  double budget_rel_logy = 0;
  double budget_distance = 0;
  double budget_xminus = 0;
  double budget_total = 0;  // |assembled| * rel + distance + xminus

  double y = 0, A = 0, B = 0, Bprime = 0, X = 0, AX = 0, x_minus = 0;
  std::string provenance;  // function names | system | box, for compare()
  std::string notes;
};

// shared tag identifying a (functions, system, box) instance; compare() refuses
// to reconcile results carrying different tags
std::string run_provenance(const std::vector<MultFunc>& f, const FormSystem& sys,
                           const BoxSpec& box);

MainTermReport main_term(const std::vector<MultFunc>& f,
                         const std::vector<DirichletChar>& chi,
                         const std::vector<double>& t, const FormSystem& sys,
                         const BoxSpec& box, double y,
                         const MainTermParams& params = {});

}  // namespace multavg
