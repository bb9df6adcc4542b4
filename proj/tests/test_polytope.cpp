#include "abg/polytope.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace abg;
using namespace abg::testing;

TEST_CASE("whole simplex has the unit vectors as vertices") {
  SimplexPolytope p{3, Matrix(0, 3), Vector(0)};
  const auto vs = enumerate_vertices(p);
  CHECK(vs.size() == 3);
  for (const auto& v : vs) CHECK(v.maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("one cut on the 2-simplex") {
  // y0 - y1 >= 0 on {y0 + y1 = 1}: segment from (1/2,1/2) to (1,0)
  SimplexPolytope p{2, mat({{1, -1}}), Vector::Zero(1)};
  const auto vs = enumerate_vertices(p);
  REQUIRE(vs.size() == 2);
  std::vector<double> first;
  for (const auto& v : vs) first.push_back(v[0]);
  std::sort(first.begin(), first.end());
  CHECK(first[0] == doctest::Approx(0.5));
  CHECK(first[1] == doctest::Approx(1.0));
  CHECK(p.contains(Vector::Unit(2, 0)));
  CHECK_FALSE(p.contains(Vector::Unit(2, 1)));
}

TEST_CASE("infeasible polytope") {
  SimplexPolytope p{2, mat({{-1, -1}}), Vector::Constant(1, 0.5)};  // -1 >= 0.5
  CHECK(enumerate_vertices(p).empty());
  CHECK_FALSE(maximize_linear(p, Vector::Ones(2)).has_value());
}

TEST_CASE("linear maximum matches a fine grid on random polytopes") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int feasible = 0;
  for (int it = 0; it < 60; ++it) {
    const int n = 2 + it % 2;
    SimplexPolytope p{n, Matrix(2, n), Vector(2)};
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < n; ++c) p.A(r, c) = u(rng);
      p.b[r] = 0.3 * u(rng);
    }
    Vector c(n);
    for (int k = 0; k < n; ++k) c[k] = u(rng);
    double grid = -1e9;
    oracle::for_each_grid_point(n, 0.005, [&](const Vector& y) {
      if ((p.A * y - p.b).minCoeff() >= 0.0) grid = std::max(grid, c.dot(y));
    });
    const auto opt = maximize_linear(p, c);
    if (!opt) {
      CHECK(grid == -1e9);
      continue;
    }
    ++feasible;
    CHECK(p.contains(opt->argmax));
    CHECK(opt->value == doctest::Approx(c.dot(opt->argmax)));
    CHECK(opt->value >= grid - 1e-12);
    // the grid step bounds how far below the true maximum it can sit
    if (grid > -1e9) CHECK(opt->value - grid <= 0.05);
  }
  CHECK(feasible > 20);
}

TEST_CASE("with_constraint appends a row") {
  SimplexPolytope p{2, Matrix(0, 2), Vector(0)};
  const auto q = p.with_constraint(Vector::Unit(2, 1), 0.25);
  CHECK(q.A.rows() == 1);
  CHECK_FALSE(q.contains(Vector::Unit(2, 0)));
}
