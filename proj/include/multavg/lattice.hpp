#pragma once
// Exact linear algebra over Z/p^e: solution counting and parametrization of
// affine congruence systems via diagonalization with unimodular transforms.
// Backbone of crt_count, the structured local averages and the character factor.

#include <vector>

#include "multavg/base.hpp"
#include "multavg/rational.hpp"

namespace multavg {

// System A n == b (mod m), A is k x l; m a prime power fitting well inside i128.
struct ModSystem {
  std::vector<std::vector<i128>> A;
  std::vector<i128> b;
  u64 mod = 1;
  int l = 0;
};

struct ModSolutionSet {
  bool solvable = false;
  Rat density;                       // |solutions| / mod^l, exact
  // affine parametrization: n = base + sum_i t_i * step[i], t_i in [0, order[i])
  std::vector<i128> base;
  std::vector<std::vector<i128>> step;
  std::vector<u64> order;
};

// count only (cheaper: no transform bookkeeping)
Rat mod_solution_density(const ModSystem& sys);

// full parametrization (base point + generators); density included
ModSolutionSet mod_solve(const ModSystem& sys);

// Column-reduce the k x l integer matrix H (homogeneous form coefficients) by
// unimodular column operations so that only the first r = rank columns are
// nonzero. Returns r and writes the l x l transform V with H_new = H * V.
int hermite_col_reduce(std::vector<std::vector<i128>>& H, std::vector<std::vector<i128>>& V);

}  // namespace multavg
