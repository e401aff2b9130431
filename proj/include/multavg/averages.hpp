#pragma once
// Empirical side of the verification loop: direct lattice averages over boxes,
// Gowers norms of interval restrictions (cyclic embedding with a prime modulus
// large enough that cube configurations never wrap), the box identity for the
// 2^k-th norm power, and the reconciliation harness against predicted main
// terms with certified budgets.

#include <string>
#include <vector>

#include "multavg/base.hpp"
#include "multavg/forms.hpp"
#include "multavg/local.hpp"
#include "multavg/multfunc.hpp"

namespace multavg {

struct AverageResult {
  cplx value;              // volume-normalized sum of prod_j f_j(L_j(n))
  u64 samples = 0;         // lattice points visited
  double wall_ms = 0;
  std::string partition;   // chunk scheme; fixed, so sums are order-deterministic
  std::string provenance;  // same tag main_term stamps on its report
};

// Exhaustive average over integer points of prod_i [1, x_i]; points where some
// form is non-positive contribute 0. threads = 0 picks the hardware count; the
// reduction order never depends on it.
AverageResult brute_average(const std::vector<MultFunc>& f, const FormSystem& sys,
                            const BoxSpec& box, int threads = 0);

struct GowersResult {
  unsigned k = 2;
  u64 x = 0;
  u64 N = 0;            // least prime exceeding 2^k x
  double value = 0;     // ||f||_{U^k[x]}, the ratio normalization
  double raw = 0;       // ||f 1_[1,x]||_{U^k(Z_N)}^{2^k}
  double raw_one = 0;   // same for the indicator alone
  std::string method;   // "direct" or "fft"
};

// vals[i] holds f(i+1); x = vals.size(). "fft" is k = 2 only.
GowersResult gowers_norm(const std::vector<cplx>& vals, unsigned k,
                         const std::string& method = "direct");
GowersResult gowers_norm(const MultFunc& f, u64 x, unsigned k,
                         const std::string& method = "direct");

// plain U^k norm of a function given on all of Z_N, no interval normalization
double gowers_group_norm(const std::vector<cplx>& g, unsigned k);

// | ||f||_{U^k[x]}^{2^k} - cube-system box average |, the two sides computed by
// independent loop structures; exact up to rounding, so the residual is a
// plumbing check, not an estimate
double gowers_identity_check(const std::vector<cplx>& vals, unsigned k = 2);

struct CompareResult {
  enum class Verdict { pass, fail, inconclusive } verdict = Verdict::inconclusive;
  double diff = 0;            // |empirical - predicted|
  double budget = 0;          // budget_total carried by the prediction
  double multiplier = 10.0;   // pass iff diff <= multiplier * budget
  std::string detail;
};

// throws std::invalid_argument when the two results carry different provenance
CompareResult compare(const AverageResult& empirical, const MainTermReport& predicted,
                      double budget_multiplier = 10.0);

struct TkResult {
  double lhs = 0;    // box mean of |h(L(n)) - mu_h|^2, h the additive shadow of f
  double rhs = 0;    // sigma_h^2 + |mu_h| / x_-
  double ratio = 0;  // lhs / rhs, 0 when both vanish
  double range = 0;  // prime-power cutoff used for the moments
};

// Turan-Kubilius concentration probe for a single form
TkResult tk_check(const MultFunc& f, const AffineForm& form, const BoxSpec& box);

// 3-progression average minus the smallest U^2(Z_N) norm among the inputs;
// nonpositive up to rounding for any 1-bounded inputs
double gvn_excess(const std::vector<std::vector<cplx>>& f);

struct GvnResult {
  double max_excess = 0;  // worst excess over the random trials
  u64 N = 0;
  unsigned trials = 0;
};

GvnResult gvn_check(u64 N, unsigned trials, u64 seed);

struct RfParams {
  double c1 = 1.0 / 320;    // distance-square decay rate
  double c2 = 1.0 / 12000;  // log-power decay rate
};

// decay envelope exp(-c1 D^2) + (log x)^{-c2} attached to a distance value
double rf_diagnostic(double dist_sq, double x, const RfParams& params = {});

}  // namespace multavg
