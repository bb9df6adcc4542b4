#include "abg/polytope.hpp"

#include "abg/errors.hpp"

#include <algorithm>

namespace abg {

SimplexPolytope SimplexPolytope::with_constraint(const Vector& row, double rhs) const {
  SimplexPolytope out = *this;
  const int k = static_cast<int>(A.rows());
  out.A.conservativeResize(k + 1, dim);
  out.b.conservativeResize(k + 1);
  out.A.row(k) = row.transpose();
  out.b[k] = rhs;
  return out;
}

bool SimplexPolytope::contains(const Vector& y, double tol) const {
  if (y.size() != dim) return false;
  if (y.minCoeff() < -tol || std::abs(y.sum() - 1.0) > tol) return false;
  if (A.rows() == 0) return true;
  return ((A * y - b).array() >= -tol).all();
}

std::vector<Vector> enumerate_vertices(const SimplexPolytope& poly, int cap) {
  const int n = poly.dim;
  if (n > cap) throw SizeCapExceeded("vertex enumeration limited to " + std::to_string(cap) + " actions");
  const int k = static_cast<int>(poly.A.rows());
  // Inequalities G y >= h: first y_j >= 0, then the explicit rows.
  Matrix G(n + k, n);
  Vector h(n + k);
  G.topRows(n) = Matrix::Identity(n, n);
  h.head(n).setZero();
  if (k > 0) {
    G.bottomRows(k) = poly.A;
    h.tail(k) = poly.b;
  }
  std::vector<Vector> out;
  const int total = n + k;
  const int choose = n - 1;
  std::vector<bool> pick(total, false);
  std::fill(pick.begin(), pick.begin() + choose, true);
  do {
    Matrix sys(n, n);
    Vector rhs(n);
    int r = 0;
    for (int i = 0; i < total; ++i) {
      if (pick[i]) {
        sys.row(r) = G.row(i);
        rhs[r] = h[i];
        ++r;
      }
    }
    sys.row(r) = Eigen::RowVectorXd::Ones(n);
    rhs[r] = 1.0;
    Eigen::FullPivLU<Matrix> lu(sys);
    if (!lu.isInvertible()) continue;
    Vector y = lu.solve(rhs);
    if (!poly.contains(y, 1e-10)) continue;
    for (int j = 0; j < n; ++j)
      if (std::abs(y[j]) < 1e-13) y[j] = 0.0;
    y = y.cwiseMax(0.0);
    y /= y.sum();
    bool dup = std::any_of(out.begin(), out.end(), [&](const Vector& v) {
      return (v - y).cwiseAbs().maxCoeff() < 1e-10;
    });
    if (!dup) out.push_back(y);
  } while (choose > 0 && std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

std::optional<LpOptimum> maximize_linear(const SimplexPolytope& poly, const Vector& c) {
  const auto verts = enumerate_vertices(poly);
  if (verts.empty()) return std::nullopt;
  LpOptimum best{c.dot(verts[0]), verts[0]};
  for (size_t i = 1; i < verts.size(); ++i) {
    const double v = c.dot(verts[i]);
    if (v > best.value + 1e-15) best = {v, verts[i]};
  }
  return best;
}

}  // namespace abg
