#include "abg/matrix_game.hpp"

#include "abg/errors.hpp"

#include <algorithm>
#include <cmath>

namespace abg {

namespace {

// Maximize sum(y) subject to B y <= 1, y >= 0, for B > 0 elementwise.
// Dense tableau, Bland's rule. Returns primal y and dual x (shadow prices).
struct PackingResult {
  Vector y;
  Vector x;
};

PackingResult solve_packing(const Matrix& b) {
  const int m = static_cast<int>(b.rows());
  const int n = static_cast<int>(b.cols());
  // Columns: n structural, m slack, then rhs.
  Matrix t = Matrix::Zero(m + 1, n + m + 1);
  t.block(0, 0, m, n) = b;
  t.block(0, n, m, m) = Matrix::Identity(m, m);
  t.block(0, n + m, m, 1) = Vector::Ones(m);
  t.block(m, 0, 1, n) = -Eigen::RowVectorXd::Ones(n);
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  const double eps = 1e-12;
  for (int iter = 0; iter < 10000; ++iter) {
    int enter = -1;
    for (int j = 0; j < n + m; ++j) {
      if (t(m, j) < -eps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    int leave = -1;
    double best = 0.0;
    for (int i = 0; i < m; ++i) {
      if (t(i, enter) > eps) {
        const double ratio = t(i, n + m) / t(i, enter);
        if (leave < 0 || ratio < best - 1e-15 ||
            (std::abs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
    }
    if (leave < 0) throw Error("matrix game LP unbounded (shift failed)");
    t.row(leave) /= t(leave, enter);
    for (int i = 0; i <= m; ++i) {
      if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
    }
    basis[leave] = enter;
  }
  PackingResult out{Vector::Zero(n), Vector::Zero(m)};
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) out.y[basis[i]] = t(i, n + m);
  for (int i = 0; i < m; ++i) out.x[i] = std::max(0.0, t(m, n + i));
  return out;
}

Vector clean_distribution(Vector w) {
  for (int k = 0; k < w.size(); ++k)
    if (w[k] < 0.0) w[k] = 0.0;
  w /= w.sum();
  for (int k = 0; k < w.size(); ++k)
    if (w[k] < kSupportThreshold) w[k] = 0.0;
  w /= w.sum();
  return w;
}

}  // namespace

MatrixGameSolution zero_sum_value(const Matrix& a) {
  if (a.size() == 0) throw InvalidArgument("empty matrix game");
  if (!a.allFinite()) throw InvalidArgument("matrix game has non-finite entries");
  const double shift = 1.0 - a.minCoeff();
  const Matrix b = a.array() + shift;
  const PackingResult lp = solve_packing(b);
  const double s = lp.y.sum();
  Vector y = clean_distribution(lp.y / s);
  Vector x = clean_distribution(lp.x / lp.x.sum());

  MatrixGameSolution sol;
  sol.row_optimal = MixedAction(x);
  sol.col_optimal = MixedAction(y);
  const double lower = (x.transpose() * a).minCoeff();
  const double upper = (a * y).maxCoeff();
  sol.value = 0.5 * (lower + upper);
  sol.duality_gap = upper - lower;
  return sol;
}

std::vector<std::vector<int>> ordered_supports(int n) {
  std::vector<std::vector<int>> out;
  for (int k = 1; k <= n; ++k) {
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + k, true);
    do {
      std::vector<int> s;
      for (int i = 0; i < n; ++i)
        if (pick[i]) s.push_back(i);
      out.push_back(s);
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  return out;
}

namespace {

// Mixed action of the opponent on `cols` making the owner (payoff matrix `u`,
// rows = owner actions) indifferent across `rows`. Returns false if none.
bool indifference(const Matrix& u, const std::vector<int>& rows, const std::vector<int>& cols,
                  Vector& mix_out, double& value_out) {
  const int k = static_cast<int>(rows.size());
  // Unknowns: mix on cols (k), value. Equations: u(row,.)·mix - value = 0, sum mix = 1.
  Matrix sys = Matrix::Zero(k + 1, k + 1);
  Vector rhs = Vector::Zero(k + 1);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) sys(i, j) = u(rows[i], cols[j]);
    sys(i, k) = -1.0;
  }
  for (int j = 0; j < k; ++j) sys(k, j) = 1.0;
  rhs[k] = 1.0;
  Eigen::FullPivLU<Matrix> lu(sys);
  if (!lu.isInvertible()) return false;
  Vector sol = lu.solve(rhs);
  if ((sys * sol - rhs).norm() > 1e-9) return false;
  mix_out = sol.head(k);
  value_out = sol[k];
  return mix_out.minCoeff() >= -1e-12;
}

Vector embed(const Vector& part, const std::vector<int>& idx, int n) {
  Vector w = Vector::Zero(n);
  for (size_t i = 0; i < idx.size(); ++i) w[idx[i]] = std::max(0.0, part[static_cast<int>(i)]);
  return w / w.sum();
}

}  // namespace

std::vector<BimatrixEquilibrium> bimatrix_equilibria(const Matrix& payoff1, const Matrix& payoff2,
                                                     int cap) {
  const int m = static_cast<int>(payoff1.rows());
  const int n = static_cast<int>(payoff1.cols());
  if (payoff2.rows() != m || payoff2.cols() != n) throw InvalidArgument("bimatrix shape mismatch");
  if (m > cap || n > cap) throw SizeCapExceeded("bimatrix game larger than the support-enumeration cap");

  std::vector<BimatrixEquilibrium> out;
  const Matrix p2t = payoff2.transpose();
  for (const auto& s1 : ordered_supports(m)) {
    for (const auto& s2 : ordered_supports(n)) {
      if (s1.size() != s2.size()) continue;
      Vector y, x;
      double v1 = 0, v2 = 0;
      if (!indifference(payoff1, s1, s2, y, v1)) continue;
      if (!indifference(p2t, s2, s1, x, v2)) continue;
      const Vector x_full = embed(x, s1, m);
      const Vector y_full = embed(y, s2, n);
      const double u1 = x_full.dot(payoff1 * y_full);
      const double u2 = x_full.dot(payoff2 * y_full);
      const double regret1 = (payoff1 * y_full).maxCoeff() - u1;
      const double regret2 = (x_full.transpose() * payoff2).maxCoeff() - u2;
      if (regret1 > 1e-8 || regret2 > 1e-8) continue;
      BimatrixEquilibrium eq{{MixedAction(x_full), MixedAction(y_full)}, u1, u2};
      bool dup = false;
      for (const auto& e : out) {
        if ((e.profile.x1.weights() - x_full).cwiseAbs().maxCoeff() < 1e-9 &&
            (e.profile.x2.weights() - y_full).cwiseAbs().maxCoeff() < 1e-9)
          dup = true;
      }
      if (!dup) out.push_back(eq);
    }
  }
  if (out.empty()) throw NoEquilibriumFound("support enumeration found no equilibrium (degenerate game)");
  return out;
}

}  // namespace abg
