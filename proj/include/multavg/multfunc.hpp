#pragma once
// 1-bounded multiplicative functions, Dirichlet characters (quadratic-symbol and
// table backends), archimedean twists, pretentious distances.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "multavg/arith.hpp"
#include "multavg/base.hpp"

namespace multavg {

// value at a prime power p^k, k >= 1
using PrimePowerOracle = std::function<cplx(u64 p, unsigned k)>;

class MultFunc {
 public:
  MultFunc() = default;
  MultFunc(std::string name, bool completely_mult, PrimePowerOracle oracle);

  const std::string& name() const { return name_; }
  bool completely_multiplicative() const { return completely_mult_; }

  // oracle value; rejects |value| > 1 + 1e-12
  cplx pp(u64 p, unsigned k) const;
  cplx eval(u64 n) const;
  // values on [0, N]; index 0 is unused (set to 0)
  std::vector<cplx> bulk_eval(u64 N) const;
  // localization f_p: agrees with f on powers of p, equals 1 elsewhere
  MultFunc localize(u64 p) const;

 private:
  std::string name_ = "one";
  bool completely_mult_ = true;
  PrimePowerOracle oracle_;
};

// named registry: one | liouville | mobius-squared | char-real:q | char-extended:q
MultFunc named_mult_func(const std::string& name);

// ---- Dirichlet characters ---------------------------------------------------

class DirichletChar {
 public:
  // trivial character mod 1
  static DirichletChar trivial();
  // real primitive character mod odd squarefree q via the quadratic symbol
  static DirichletChar real_primitive(u64 q);
  // full character group mod q (q <= 10^4), CRT of cyclic components
  static std::vector<DirichletChar> group(u64 q);

  u64 modulus() const { return q_; }
  u64 conductor() const;
  bool primitive() const { return conductor() == q_; }
  bool real() const;
  int parity() const;  // chi(-1)
  cplx value(u64 n) const;
  cplx value_signed(i64 n) const;  // chi extended to negative arguments
  // chi restricted to its component mod p^{e} (p | q), evaluated at n
  cplx component_value(u64 p, u64 n) const;
  // the multiplicative function n -> chi(n)
  MultFunc as_mult_func() const;
  // chi extended by 1 on primes dividing q (completely multiplicative, +-1-valued
  // when chi is real)
  MultFunc extended_by_one() const;
  std::string label() const;

 private:
  DirichletChar() = default;
  u64 q_ = 1;
  bool real_backend_ = true;
  // table backend state
  struct Component {
    u64 p = 0, pe = 1;       // prime and prime power
    u64 order = 1;           // order of the cyclic piece
    u64 index = 0;           // character index c: chi(g^a) = e(c a / order)
    std::vector<u64> dlog;   // residue -> exponent, order for non-units
  };
  std::vector<Component> comps_;
  bool two_special_ = false;  // modulus 2^e, e >= 3: extra sign component
  mutable i64 conductor_cache_ = -1;
  friend std::vector<DirichletChar> make_group(u64 q);
};

// archimedean twist n^{-it}
struct ArchTwist {
  double t = 0;
  cplx value(double n) const;
};

// F(n) = f(n) conj(chi(n)) n^{-it} on (n, q) = 1, extended by 1 on primes p | q
// (prime-power level, so F stays multiplicative)
struct TwistedFunc {
  MultFunc f;
  DirichletChar chi;
  double t = 0;
  MultFunc as_mult_func() const;
};

// pretentious distance D(f,g; y,x) over primes in (y, x]; requires 1 <= y <= x
double distance(const MultFunc& f, const MultFunc& g, double y, double x);
// prime-power variant over p^k in (y, x]
double distance_star(const MultFunc& f, const MultFunc& g, double y, double x);

struct MinDistanceResult {
  double value = 0;    // inf of D(g, chi n^{it}; X)^2
  u64 q = 1;
  int char_index = 0;  // position within DirichletChar::group(q)
  std::string char_label;
  double t = 0;
};

// grid infimum of D(g, chi n^{it}; X)^2 over chi mod q <= Q and |t| <= X,
// t on a grid of step grid_step (default 0.05 / log X)
MinDistanceResult min_distance(const MultFunc& g, double X, u64 Q, double grid_step = 0);

// (mu_h(x), sigma_h(x)^2) for the additive companion h(p^k) = f(p^k) - 1:
//   mu = sum_{p^k <= x} h(p^k) p^{-k}(1 - 1/p),  sigma^2 likewise with |h|^2
struct AdditiveMoments {
  cplx mu;
  double sigma2 = 0;
};
AdditiveMoments additive_moments(const MultFunc& f, double x);

}  // namespace multavg
