#pragma once

#include "abg/game.hpp"

namespace abg {

// Absorbing game with stage payoffs: p, r_i on absorption, z_i per
// nonabsorbing stage. Covers average-payoff and discounted games alike.
struct StageGame {
  Matrix p;
  Matrix r[2];
  Matrix z[2];

  int rows() const { return static_cast<int>(p.rows()); }
  int cols() const { return static_cast<int>(p.cols()); }
};

// Stage game of a base game whose nonabsorbing payoffs admit a stage form
// (constant or limsup-average). Other kinds get z = NaN for that player.
StageGame stage_game_of(const GameSpec& g);

// Stationary payoff of x in the lambda-discounted game.
double discounted_stationary_payoff(const StageGame& sg, const MixedProfile& x, int player,
                                    double lambda);

// Zero-sum view for `player` as maximizer: rows = player's actions.
struct ZeroSumStageGame {
  Matrix p;
  Matrix r;
  Matrix z;
};

ZeroSumStageGame zero_sum_view(const StageGame& sg, int player);

}  // namespace abg
