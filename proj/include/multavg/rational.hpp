#pragma once
// Exact rational arithmetic on 128-bit integers. Densities handled here are
// reduced aggressively so intermediate denominators stay inside i128.

#include "multavg/base.hpp"

namespace multavg {

struct Rat {
  i128 num = 0;
  i128 den = 1;  // invariant: den > 0, gcd(|num|, den) = 1

  Rat() = default;
  Rat(i128 n) : num(n), den(1) {}
  Rat(i128 n, i128 d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0) throw std::domain_error("rational with zero denominator");
    if (den < 0) { num = -num; den = -den; }
    i128 g = gcd_i128(num, den);
    if (g > 1) { num /= g; den /= g; }
  }

  Rat operator+(const Rat& o) const {
    i128 g = gcd_i128(den, o.den);
    i128 l = den / g * o.den;
    return Rat(num * (o.den / g) + o.num * (den / g), l);
  }
  Rat operator-(const Rat& o) const { return *this + Rat(-o.num, o.den); }
  Rat operator*(const Rat& o) const {
    i128 g1 = gcd_i128(num, o.den), g2 = gcd_i128(o.num, den);
    Rat r;
    r.num = (num / g1) * (o.num / g2);
    r.den = (den / g2) * (o.den / g1);
    return r;
  }
  Rat operator/(const Rat& o) const {
    if (o.num == 0) throw std::domain_error("rational division by zero");
    return *this * Rat(o.den, o.num);
  }
  bool operator==(const Rat& o) const { return num == o.num && den == o.den; }
  bool operator!=(const Rat& o) const { return !(*this == o); }

  double to_double() const { return (double)num / (double)den; }
  std::string str() const { return to_string_i128(num) + "/" + to_string_i128(den); }
};

}  // namespace multavg
