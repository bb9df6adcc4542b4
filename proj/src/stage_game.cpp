#include "abg/stage_game.hpp"

#include <limits>

namespace abg {

StageGame stage_game_of(const GameSpec& g) {
  StageGame sg;
  sg.p = g.absorb_prob;
  for (int i = 0; i < 2; ++i) {
    sg.r[i] = g.absorb_payoff[i];
    if (const auto* c = std::get_if<ConstantPayoff>(&g.payoff[i].rule)) {
      sg.z[i] = Matrix::Constant(g.rows(), g.cols(), c->value);
    } else if (const auto* t = std::get_if<LimsupAverage>(&g.payoff[i].rule)) {
      sg.z[i] = t->z;
    } else {
      sg.z[i] = Matrix::Constant(g.rows(), g.cols(), std::numeric_limits<double>::quiet_NaN());
    }
  }
  return sg;
}

double discounted_stationary_payoff(const StageGame& sg, const MixedProfile& x, int player,
                                    double lambda) {
  const Vector& w1 = x.x1.weights();
  const Vector& w2 = x.x2.weights();
  const double px = w1.dot(sg.p * w2);
  const double absorbed = w1.dot(sg.p.cwiseProduct(sg.r[player]) * w2);
  const Matrix q = Matrix::Ones(sg.rows(), sg.cols()) - sg.p;
  const double stage = w1.dot(q.cwiseProduct(sg.z[player]) * w2);
  return (absorbed + lambda * stage) / (px + lambda * (1.0 - px));
}

ZeroSumStageGame zero_sum_view(const StageGame& sg, int player) {
  if (player == 0) return {sg.p, sg.r[0], sg.z[0]};
  return {sg.p.transpose(), sg.r[1].transpose(), sg.z[1].transpose()};
}

}  // namespace abg
