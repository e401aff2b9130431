#pragma once
// Affine-linear form systems, parsing, validation, Cauchy-Schwarz complexity,
// and the canned families (Gowers cube systems, arithmetic-progression systems).

#include <string>
#include <vector>

#include "multavg/base.hpp"

namespace multavg {

struct AffineForm {
  std::vector<i64> coef;  // homogeneous part
  i64 cst = 0;

  i64 eval(const std::vector<i64>& n) const {
    i128 v = cst;
    for (size_t i = 0; i < coef.size(); i++) v += (i128)coef[i] * n[i];
    if (v > INT64_MAX || v < INT64_MIN) throw std::overflow_error("form value overflow");
    return (i64)v;
  }
  bool degenerate() const {
    for (i64 c : coef)
      if (c != 0) return false;
    return true;
  }
  bool primitive() const;  // gcd of homogeneous coefficients is 1
};

struct FormSystem {
  int l = 0;                       // number of variables
  std::vector<AffineForm> forms;   // k = forms.size()
  std::vector<std::string> vars;   // display names (n, d, ... by default)

  int k() const { return (int)forms.size(); }
  std::string str() const;
};

struct ValidationReport {
  bool ok = false;
  bool all_primitive = false;
  bool pairwise_independent = false;  // no two homogeneous parts are parallel
  bool has_degenerate = false;
  std::string message;
};

ValidationReport validate_system(const FormSystem& sys);

// height A: largest absolute coefficient (homogeneous or constant), at least 1
i64 system_height(const FormSystem& sys);

// "n; n+d; n+2d" grammar: forms split on ';', terms like 2n, -d, +5.
// Variable order is first-appearance order.
FormSystem parse_system(const std::string& text);

// Cauchy-Schwarz complexity: max over j of the least s >= 0 such that the other
// forms split into s+1 classes, none of whose homogeneous spans contains L_j.
// Exhaustive partition search; k <= 10.
int cs_complexity(const FormSystem& sys);

// Gowers cube system on k+1 variables: one form per vertex j (binary digits a_l),
//   L_j = n_{k+1} + sum_l a_l n_{l+1},
// with conjugation weight d_j = digit sum of j. 2 <= k <= 5.
struct GowersSystem {
  FormSystem system;
  std::vector<unsigned> conj_weight;   // d_j per form
};
GowersSystem gowers_system(int k);

// progression systems: forms n + j d for j in S (variables n, d)
FormSystem ap_system(const std::vector<int>& S);
// two-progression system: n + j d (j in S) and n' + j' d (j' in T), variables n, n', d
FormSystem ap_system2(const std::vector<int>& S, const std::vector<int>& T);

// box (0, x_1] x ... x (0, x_l]
struct BoxSpec {
  std::vector<double> x;

  int l() const { return (int)x.size(); }
  double x_minus() const;
  double x_plus() const;
  double volume() const;
  // smallest side at least 3 and dominating l * (loglog((l+1) A x_+))^2 (log x_+)^B
  bool appropriate(i64 A, double B) const;
  static BoxSpec square(double x, int l);
};

// largest value any form takes on integer points of the box (for sieve sizing);
// throws if some form is non-positive somewhere on the box
u64 form_range_max(const FormSystem& sys, const BoxSpec& box);

}  // namespace multavg
