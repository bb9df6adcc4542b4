#pragma once

#include "abg/io.hpp"

#include <string>

namespace abg::testing {

inline std::string fixture_path(const std::string& name) { return std::string(ABG_FIXTURES) + "/" + name; }
inline GameSpec fixture(const std::string& name) { return parse_game_file(fixture_path(name)); }

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  int i = 0;
  for (const auto& r : rows) {
    int j = 0;
    for (double x : r) m(i, j++) = x;
    ++i;
  }
  return m;
}

inline MixedAction mixed(std::initializer_list<double> w) {
  Vector v(w.size());
  int k = 0;
  for (double x : w) v[k++] = x;
  return MixedAction(v);
}

// Rows C (never absorbs) and Q (always absorbs); Q pays (1,0) against L
// and (0,1) against R. Nonabsorbing payoffs are the given constants.
inline GameSpec big_match(double c1, double c2) {
  GameSpec g;
  g.actions1 = {"C", "Q"};
  g.actions2 = {"L", "R"};
  g.absorb_prob = mat({{0, 0}, {1, 1}});
  g.absorb_payoff[0] = mat({{0, 0}, {1, 0}});
  g.absorb_payoff[1] = mat({{0, 0}, {0, 1}});
  for (int k = 0; k < 2; ++k) {
    g.has_absorb_payoff[k] = BoolMatrix::Constant(2, 2, true);
    g.has_absorb_payoff[k].row(0).setConstant(false);
  }
  g.payoff[0].rule = ConstantPayoff{c1};
  g.payoff[1].rule = ConstantPayoff{c2};
  return validate_game(g);
}

// Generic game with LimsupAverage payoffs.
inline GameSpec limsup_game(const Matrix& p, const Matrix& r1, const Matrix& r2, const Matrix& z1,
                            const Matrix& z2) {
  GameSpec g;
  for (int a = 0; a < p.rows(); ++a) g.actions1.push_back("r" + std::to_string(a));
  for (int b = 0; b < p.cols(); ++b) g.actions2.push_back("c" + std::to_string(b));
  g.absorb_prob = p;
  g.absorb_payoff[0] = r1;
  g.absorb_payoff[1] = r2;
  for (int k = 0; k < 2; ++k) g.has_absorb_payoff[k] = BoolMatrix::Constant(p.rows(), p.cols(), true);
  g.payoff[0].rule = LimsupAverage{z1};
  g.payoff[1].rule = LimsupAverage{z2};
  return validate_game(g);
}

}  // namespace abg::testing
