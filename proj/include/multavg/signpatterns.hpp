#pragma once
// Sign-pattern censuses on 3- and 4-term progressions, the elliptic-curve bias
// predictor for real-character twists, second-moment constants, and the exact
// identity suite tying them together: Legendre point counts, the complete
// character sum over four consecutive residues, the Jacobi-sum evaluation, and
// the 4-progression character transfer with its small-subsystem vanishing.

#include <array>
#include <string>
#include <vector>

#include "multavg/base.hpp"
#include "multavg/forms.hpp"
#include "multavg/multfunc.hpp"
#include "multavg/rational.hpp"

namespace multavg {

struct SignPattern {
  std::vector<int> eps;  // entries +-1, length 3 or 4

  SignPattern() = default;
  explicit SignPattern(std::vector<int> e);
  // bit j of idx set means eps_j = -1
  static SignPattern from_index(unsigned idx, int m);

  int m() const { return (int)eps.size(); }
  unsigned index() const;
  int product() const;   // eps_0 ... eps_{m-1}
  int pair_sum() const;  // sum_{i<j} eps_i eps_j
  std::string str() const;  // e.g. "++-+"
};

struct LegendreCurve {
  u64 p = 0;
  u64 lambda = 0;
  u64 points = 0;  // #E(F_p) including the point at infinity
  i64 delta = 0;   // trace p + 1 - #E; |delta| <= 2 sqrt(p)
};

// exact quadratic-symbol sweep, O(p); rejects p | 6 and singular lambda
LegendreCurve ec_count(u64 p, u64 lambda);
// the curve the transfer lemma attaches to p: lambda = 3 inv(2)^2 mod p
LegendreCurve lemma_curve(u64 p);

struct BlankSumResult {
  i64 sum = 0;        // sum over d mod p of chi_p(d(d+1)(d+2)(d+3))
  i64 predicted = 0;  // -(delta_p + 1)
  i64 residual = 0;   // sum - predicted, exactly 0
};
BlankSumResult blank_sum(u64 p);

// J(chi_p, chi_p) + chi_p(-1); exactly 0 for every odd prime
i64 jacobi_sum_check(u64 p);

struct ElltransResult {
  cplx xi;             // Xi at equal unit divisors on the 4-progression system
  double predicted;    // mu(q) phi(q) prod_{p|q} delta_p
  double residual;     // |xi - predicted|, exactly 0
  bool vanishing_ok;   // Xi = 0 on the probed non-equal divisor tuples
};
ElltransResult elltrans_check(u64 q);

// max |Xi| over every progression subsystem of size 2 or 3 and a batch of
// divisor tuples; exactly 0
double triv23_max(u64 q);

struct BiasResult {
  double curve_product = 1;  // prod_{p|q} mu(p) delta_p / (p+1)
  double local_product = 1;  // prod_{p<=P, p coprime to q} M_p on the 4-progression
  double local_tail = 0;     // truncation bound <= sum_{p>P} 4/p^2
  u64 P = 1000;
  double dist = 0;           // D(f, chi; 1, 1e4), the sanity metric
  bool sane = true;
  bool verified_path = true;  // |f| = 1 on prime powers of p | q
};
BiasResult bias(const MultFunc& f, u64 q, u64 P = 1000);
// the bias value: product of signs times curve and local products
double a_eps(const MultFunc& f, u64 q, const SignPattern& eps, u64 P = 1000);

struct TConstants {
  double t22 = 0, t42 = 0, t44 = 0;
  Rat t22_q{1}, t42_q{1}, t44_q{1};  // exact parts over p | q
  double local22 = 1, local42 = 1, local4 = 1;  // truncated products over p coprime to q
  double tail = 0;          // shared truncation bound
  u64 P = 1000;
  bool supersingular = false;  // some delta_p = 0; t44 uses the cancelled form always
  std::string note;
};
TConstants t_constants(const MultFunc& f, u64 q, u64 P = 1000);
// right side of the second-moment display for the given pattern
double msq_prediction(const MultFunc& f, u64 q, const SignPattern& eps, u64 P = 1000);

// spread of the truncated local product across distinct (2,2) two-progression
// systems; the transfer argument makes it form-independent
double pindep_probe(const MultFunc& f, const DirichletChar& chi, u64 P = 1000,
                    unsigned max_choices = 6);

enum class DFilter { all, non_multiple, multiple };  // every d, q does not divide d, q | d

struct PatternCensus {
  std::string fname;
  u64 q = 0;
  u64 x = 0, z = 0;
  int m = 3;
  DFilter filter = DFilter::all;
  double tolerance = 0.01;  // reported alongside results, never silently asserted

  std::vector<u64> dlist;                // differences passing the filter
  std::vector<std::vector<u64>> counts;  // counts[i][pattern index], per d

  std::vector<double> mean;       // per pattern, mean density over dlist
  std::vector<double> variance;   // per pattern, population variance of densities
  std::vector<double> predicted;  // per pattern; empty when no prediction applies
  std::vector<double> msq_left;   // per pattern, mean square deviation from predicted
  std::vector<double> msq_predicted;  // per pattern, second-moment right side

  bool has_tconstants = false;
  TConstants tcon;
  std::string note;
  double wall_ms = 0;
};

PatternCensus census(const MultFunc& f, u64 q, u64 x, u64 z, int m,
                     DFilter filter = DFilter::all, double tolerance = 0.01,
                     int threads = 0);

// indicator counting vs the 2^m-term product expansion, both in exact integer
// arithmetic; returns the largest absolute discrepancy (0)
i64 census_expansion_check(const MultFunc& f, u64 x, u64 z, int m);

// residual max(0, RHS - LHS) of the weighted lower bound
//   Re(sum w_j a_j conj(b_j)) >= ((A+B)^2/2 - X) H
double basic_inequality_check(const std::vector<cplx>& a, const std::vector<cplx>& b,
                              const std::vector<double>& w, double X);

struct LogdensResult {
  std::array<std::array<int, 2>, 6> pair_index;  // the six 2-subsets of {0,1,2,3}
  std::array<double, 6> pair_corr;  // logarithmic 2-point correlations at lag d
  double c4 = 0;     // logarithmic 4-point self-correlation
  double bound = 0;  // (1/8)(1 - |c4|), the union lower bound
  bool threshold_ok = true;  // bound > 1/28 whenever |c4| <= 1/sqrt(2)
};
LogdensResult logdens_decomposition(const MultFunc& f, u64 d, u64 x);

}  // namespace multavg
