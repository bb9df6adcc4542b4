#pragma once

#include "abg/game.hpp"

#include <optional>
#include <vector>

namespace abg {

// {y on the probability simplex of dimension `dim` : A y >= b}.
struct SimplexPolytope {
  int dim = 0;
  Matrix A;
  Vector b;

  SimplexPolytope with_constraint(const Vector& row, double rhs) const;
  bool contains(const Vector& y, double tol = 1e-9) const;
};

inline constexpr int kVertexCap = 8;

// Exact vertex enumeration (every vertex is the unique solution of dim-1
// tight inequalities plus the simplex equation).
std::vector<Vector> enumerate_vertices(const SimplexPolytope& poly, int cap = kVertexCap);

struct LpOptimum {
  double value = 0.0;
  Vector argmax;
};

// max c.y over the polytope, by vertex enumeration; empty if infeasible.
std::optional<LpOptimum> maximize_linear(const SimplexPolytope& poly, const Vector& c);

}  // namespace abg
