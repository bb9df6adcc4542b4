#pragma once

#include "abg/game.hpp"

#include <vector>

namespace abg {

// Row player maximizes, column player minimizes.
struct MatrixGameSolution {
  double value = 0.0;
  MixedAction row_optimal;
  MixedAction col_optimal;
  double duality_gap = 0.0;
};

MatrixGameSolution zero_sum_value(const Matrix& a);

struct BimatrixEquilibrium {
  MixedProfile profile;
  double payoff1 = 0.0;
  double payoff2 = 0.0;
};

inline constexpr int kBimatrixCap = 8;

// All equilibria reachable by support enumeration, smallest supports first.
std::vector<BimatrixEquilibrium> bimatrix_equilibria(const Matrix& payoff1, const Matrix& payoff2,
                                                     int cap = kBimatrixCap);

// Subsets of {0..n-1} ordered by size, then lexicographically.
std::vector<std::vector<int>> ordered_supports(int n);

}  // namespace abg
