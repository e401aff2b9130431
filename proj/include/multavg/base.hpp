#pragma once
// Shared fixed-width aliases and tiny numeric helpers used across the library.

#include <cstdint>
#include <complex>
#include <stdexcept>
#include <string>
#include <numeric>

namespace multavg {

using i64 = std::int64_t;
using u64 = std::uint64_t;
using i128 = __int128_t;
using u128 = __uint128_t;
using cplx = std::complex<double>;

inline std::string to_string_i128(i128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  u128 x = neg ? (u128)(-v) : (u128)v;
  std::string s;
  while (x) { s.push_back(char('0' + int(x % 10))); x /= 10; }
  if (neg) s.push_back('-');
  return std::string(s.rbegin(), s.rend());
}

inline i128 gcd_i128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b) { i128 t = a % b; a = b; b = t; }
  return a;
}

// overflow-checked u64 product; throws on wrap
inline u64 mul_checked(u64 a, u64 b) {
  u128 p = (u128)a * b;
  if (p > (u128)UINT64_MAX) throw std::overflow_error("u64 overflow");
  return (u64)p;
}

inline u64 pow_checked(u64 p, unsigned k) {
  u64 r = 1;
  while (k--) r = mul_checked(r, p);
  return r;
}

inline u64 mulmod_u64(u64 a, u64 b, u64 m) { return (u64)((u128)a * b % m); }

inline u64 powmod_u64(u64 a, u64 e, u64 m) {
  u64 r = 1 % m;
  a %= m;
  while (e) {
    if (e & 1) r = mulmod_u64(r, a, m);
    a = mulmod_u64(a, a, m);
    e >>= 1;
  }
  return r;
}

// deterministic seed mixer (splitmix64)
inline u64 splitmix64(u64 x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace multavg
