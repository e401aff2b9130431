#include "multavg/lattice.hpp"

#include <algorithm>
#include <stdexcept>

namespace multavg {

namespace {

i128 mod_red(i128 x, i128 m) {
  x %= m;
  if (x < 0) x += m;
  return x;
}

// extended gcd on nonneg inputs; returns g, writes x,y with a*x + b*y = g
i128 egcd(i128 a, i128 b, i128& x, i128& y) {
  if (b == 0) { x = 1; y = 0; return a; }
  i128 x1, y1;
  i128 g = egcd(b, a % b, x1, y1);
  x = y1;
  y = x1 - (a / b) * y1;
  return g;
}

i128 inv_mod(i128 a, i128 m) {
  i128 x, y;
  i128 g = egcd(mod_red(a, m), m, x, y);
  if (g != 1) throw std::domain_error("inverse of non-unit");
  return mod_red(x, m);
}

// Diagonalized system: diag holds min(k,l) pivots; rows past l must have b == 0.
struct Diag {
  std::vector<i128> diag;
  std::vector<i128> b;                 // transformed rhs
  std::vector<std::vector<i128>> V;    // n = V y, tracked only when wanted
  bool rows_consistent = true;         // zero-row constraints satisfied
  int k = 0, l = 0;
  u64 mod = 1;
};

Diag diagonalize(const ModSystem& sys, bool track_V) {
  const int k = (int)sys.A.size(), l = sys.l;
  const i128 m = (i128)sys.mod;
  Diag d;
  d.k = k; d.l = l; d.mod = sys.mod;
  std::vector<std::vector<i128>> A(k, std::vector<i128>(l, 0));
  for (int i = 0; i < k; i++)
    for (int j = 0; j < l; j++) A[i][j] = mod_red(sys.A[i][j], m);
  d.b.resize(k);
  for (int i = 0; i < k; i++) d.b[i] = mod_red(sys.b[i], m);
  if (track_V) {
    d.V.assign(l, std::vector<i128>(l, 0));
    for (int j = 0; j < l; j++) d.V[j][j] = 1;
  }

  int s = std::min(k, l);
  for (int t = 0; t < s; t++) {
    // find a nonzero pivot in the remaining block
    int pi = -1, pj = -1;
    for (int i = t; i < k && pi < 0; i++)
      for (int j = t; j < l; j++)
        if (A[i][j] != 0) { pi = i; pj = j; break; }
    if (pi < 0) break;  // rest of the block is zero
    std::swap(A[t], A[pi]);
    std::swap(d.b[t], d.b[pi]);
    for (int i = 0; i < k; i++) std::swap(A[i][t], A[i][pj]);
    if (track_V)
      for (int j = 0; j < l; j++) std::swap(d.V[j][t], d.V[j][pj]);

    // pure eliminations (pivot divides entry) leave the pivot row and column
    // intact; Bezout pairs strictly shrink the pivot, so the dirty loop is
    // bounded by the divisor chain of m
    bool dirty = true;
    while (dirty) {
      dirty = false;
      // clear column t below the pivot
      for (int i = t + 1; i < k; i++) {
        if (A[i][t] == 0) continue;
        i128 a = A[t][t], c = A[i][t];
        if (c % a == 0) {
          i128 q = c / a;
          for (int j = t; j < l; j++) A[i][j] = mod_red(A[i][j] - q * A[t][j], m);
          d.b[i] = mod_red(d.b[i] - q * d.b[t], m);
          continue;
        }
        i128 x, y;
        i128 g = egcd(a, c, x, y);
        i128 a_g = a / g, c_g = c / g;
        for (int j = t; j < l; j++) {
          i128 rt = mod_red(x * A[t][j] + y * A[i][j], m);
          i128 ri = mod_red(a_g * A[i][j] - c_g * A[t][j], m);
          A[t][j] = rt;
          A[i][j] = ri;
        }
        i128 bt = mod_red(x * d.b[t] + y * d.b[i], m);
        i128 bi = mod_red(a_g * d.b[i] - c_g * d.b[t], m);
        d.b[t] = bt;
        d.b[i] = bi;
      }
      // clear row t right of the pivot
      for (int j = t + 1; j < l; j++) {
        if (A[t][j] == 0) continue;
        i128 a = A[t][t], c = A[t][j];
        if (c % a == 0) {
          i128 q = c / a;
          for (int i = t; i < k; i++) A[i][j] = mod_red(A[i][j] - q * A[i][t], m);
          if (track_V)
            for (int r = 0; r < l; r++) d.V[r][j] = mod_red(d.V[r][j] - q * d.V[r][t], m);
          continue;  // column t untouched
        }
        i128 x, y;
        i128 g = egcd(a, c, x, y);
        i128 a_g = a / g, c_g = c / g;
        for (int i = t; i < k; i++) {
          i128 ct = mod_red(x * A[i][t] + y * A[i][j], m);
          i128 cj = mod_red(a_g * A[i][j] - c_g * A[i][t], m);
          A[i][t] = ct;
          A[i][j] = cj;
        }
        if (track_V)
          for (int r = 0; r < l; r++) {
            i128 vt = mod_red(x * d.V[r][t] + y * d.V[r][j], m);
            i128 vj = mod_red(a_g * d.V[r][j] - c_g * d.V[r][t], m);
            d.V[r][t] = vt;
            d.V[r][j] = vj;
          }
        dirty = true;  // Bezout column ops can repopulate column t
      }
    }
  }

  d.diag.assign(s, 0);
  for (int t = 0; t < s; t++) d.diag[t] = A[t][t];
  // rows below l carry pure constraints 0 == b[i]
  for (int i = l; i < k; i++)
    if (mod_red(d.b[i], m) != 0) d.rows_consistent = false;
  return d;
}

}  // namespace

Rat mod_solution_density(const ModSystem& sys) {
  Diag d = diagonalize(sys, false);
  if (!d.rows_consistent) return Rat(0);
  const i128 m = (i128)sys.mod;
  Rat dens(1);
  int s = (int)d.diag.size();
  for (int t = 0; t < s; t++) {
    i128 g = gcd_i128(d.diag[t], m);
    if (g == 0) g = m;  // zero pivot: constraint 0*y == b
    if (mod_red(d.b[t], g) != 0) return Rat(0);
    dens = dens * Rat(g, m);
  }
  // coordinates past s (l > k) are free: density factor 1 each
  return dens;
}

ModSolutionSet mod_solve(const ModSystem& sys) {
  ModSolutionSet out;
  Diag d = diagonalize(sys, true);
  const i128 m = (i128)sys.mod;
  if (!d.rows_consistent) return out;
  const int l = sys.l;
  int s = (int)d.diag.size();
  std::vector<i128> y0(l, 0);
  std::vector<i128> stride(l, 1);
  std::vector<u64> order(l, 1);
  Rat dens(1);
  for (int t = 0; t < l; t++) {
    if (t < s) {
      i128 dd = d.diag[t];
      i128 g = gcd_i128(dd, m);
      if (g == 0) g = m;
      if (mod_red(d.b[t], g) != 0) return out;  // unsolvable
      if (g == m) {
        // 0 * y == 0: coordinate free
        y0[t] = 0;
        stride[t] = 1;
        order[t] = sys.mod;
      } else {
        i128 mg = m / g;
        y0[t] = mod_red((d.b[t] / g) * inv_mod(dd / g, mg), mg);
        stride[t] = mg;
        order[t] = (u64)g;
      }
      dens = dens * Rat(g, m);
    } else {
      // free coordinate (system had fewer rows than variables)
      y0[t] = 0;
      stride[t] = 1;
      order[t] = sys.mod;
    }
  }
  out.solvable = true;
  out.density = dens;
  out.base.assign(l, 0);
  for (int r = 0; r < l; r++) {
    i128 acc = 0;
    for (int t = 0; t < l; t++) acc += d.V[r][t] * y0[t];
    out.base[r] = mod_red(acc, m);
  }
  for (int t = 0; t < l; t++) {
    if (order[t] <= 1) continue;
    std::vector<i128> st(l);
    for (int r = 0; r < l; r++) st[r] = mod_red(d.V[r][t] * stride[t], m);
    out.step.push_back(st);
    out.order.push_back(order[t]);
  }
  return out;
}

int hermite_col_reduce(std::vector<std::vector<i128>>& H, std::vector<std::vector<i128>>& V) {
  const int k = (int)H.size();
  const int l = k ? (int)H[0].size() : 0;
  V.assign(l, std::vector<i128>(l, 0));
  for (int j = 0; j < l; j++) V[j][j] = 1;
  int r = 0;
  for (int i = 0; i < k && r < l; i++) {
    // gcd-out row i across columns r..l-1
    int pj = -1;
    for (int j = r; j < l; j++)
      if (H[i][j] != 0) { pj = j; break; }
    if (pj < 0) continue;
    for (int c = 0; c < k; c++) std::swap(H[c][r], H[c][pj]);
    for (int c = 0; c < l; c++) std::swap(V[c][r], V[c][pj]);
    for (int j = r + 1; j < l; j++) {
      while (H[i][j] != 0) {
        i128 q = H[i][r] / H[i][j];
        for (int c = 0; c < k; c++) H[c][r] -= q * H[c][j];
        for (int c = 0; c < l; c++) V[c][r] -= q * V[c][j];
        for (int c = 0; c < k; c++) std::swap(H[c][r], H[c][j]);
        for (int c = 0; c < l; c++) std::swap(V[c][r], V[c][j]);
      }
    }
    r++;
  }
  return r;
}

}  // namespace multavg
