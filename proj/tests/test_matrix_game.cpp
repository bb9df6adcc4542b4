#include "abg/errors.hpp"
#include "abg/matrix_game.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace abg;
using namespace abg::testing;

TEST_CASE("matching pennies") {
  const auto s = zero_sum_value(mat({{1, 0}, {0, 1}}));
  CHECK(s.value == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.row_optimal[0] == doctest::Approx(0.5));
  CHECK(s.col_optimal[1] == doctest::Approx(0.5));
  CHECK(s.duality_gap <= 1e-12);
}

TEST_CASE("pure saddle point") {
  const auto s = zero_sum_value(mat({{3, 1, 4}, {2, 0, 1}}));
  CHECK(s.value == doctest::Approx(1));
  CHECK(s.row_optimal.is_pure());
  CHECK(s.col_optimal[1] == doctest::Approx(1));
}

TEST_CASE("value agrees with the kernel oracle on random matrices") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> size(1, 4);
  for (int it = 0; it < 300; ++it) {
    Matrix a(size(rng), size(rng));
    for (int i = 0; i < a.rows(); ++i)
      for (int j = 0; j < a.cols(); ++j) a(i, j) = u(rng);
    const auto s = zero_sum_value(a);
    const double ref = oracle::matrix_value(a);
    REQUIRE(std::isfinite(ref));
    CHECK(std::abs(s.value - ref) <= 1e-9);
    // the strategies guarantee the value
    CHECK((s.row_optimal.weights().transpose() * a).minCoeff() >= ref - 1e-9);
    CHECK((a * s.col_optimal.weights()).maxCoeff() <= ref + 1e-9);
  }
}

TEST_CASE("bad matrices are rejected") {
  CHECK_THROWS_AS(zero_sum_value(Matrix(0, 0)), InvalidArgument);
  Matrix a = Matrix::Zero(2, 2);
  a(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(zero_sum_value(a), InvalidArgument);
}

TEST_CASE("supports are ordered by size then lexicographically") {
  const auto s = ordered_supports(3);
  REQUIRE(s.size() == 7);
  CHECK(s[0] == std::vector<int>{0});
  CHECK(s[2] == std::vector<int>{2});
  CHECK(s[3] == std::vector<int>{0, 1});
  CHECK(s[5] == std::vector<int>{1, 2});
  CHECK(s[6] == std::vector<int>{0, 1, 2});
}

namespace {

double nash_gap(const BimatrixEquilibrium& e, const Matrix& A, const Matrix& B) {
  const Vector& x = e.profile.x1.weights();
  const Vector& y = e.profile.x2.weights();
  const double u1 = x.dot(A * y), u2 = x.dot(B * y);
  return std::max((A * y).maxCoeff() - u1, (x.transpose() * B).maxCoeff() - u2);
}

}  // namespace

TEST_CASE("coordination game has three equilibria, pure first") {
  const Matrix A = mat({{2, 0}, {0, 1}}), B = mat({{1, 0}, {0, 2}});
  const auto eqs = bimatrix_equilibria(A, B);
  REQUIRE(eqs.size() == 3);
  CHECK(eqs[0].profile.x1.is_pure());
  CHECK(eqs[1].profile.x1.is_pure());
  // mixed: player 1 makes player 2 indifferent, x = (2/3, 1/3)
  CHECK(eqs[2].profile.x1[0] == doctest::Approx(2.0 / 3.0));
  CHECK(eqs[2].profile.x2[0] == doctest::Approx(1.0 / 3.0));
  for (const auto& e : eqs) CHECK(nash_gap(e, A, B) <= 1e-12);
}

TEST_CASE("random bimatrix games: every reported profile is an equilibrium") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int it = 0; it < 100; ++it) {
    const int m = 2 + it % 3, n = 2 + (it / 3) % 3;
    Matrix A(m, n), B(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        A(i, j) = u(rng);
        B(i, j) = u(rng);
      }
    const auto eqs = bimatrix_equilibria(A, B);
    REQUIRE_FALSE(eqs.empty());
    for (const auto& e : eqs) {
      CHECK(nash_gap(e, A, B) <= 1e-9);
      CHECK(e.payoff1 == doctest::Approx(e.profile.x1.weights().dot(A * e.profile.x2.weights())));
    }
  }
}
