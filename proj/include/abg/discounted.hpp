#pragma once

#include "abg/matrix_game.hpp"
#include "abg/stage_game.hpp"

#include <utility>
#include <vector>

namespace abg {

// One-shot matrix p r + (1-p)(lambda z + (1-lambda) v).
Matrix shapley_matrix(const ZeroSumStageGame& g, double lambda, double v);

struct DiscountedSolution {
  double value = 0.0;
  MatrixGameSolution stage;  // optimal one-shot strategies at the fixed point
  double residual = 0.0;     // |val(T(v)) - v|
};

DiscountedSolution shapley_discounted_value(const ZeroSumStageGame& g, double lambda);

std::vector<double> default_lambda_schedule();

struct VanishingDiscountResult {
  double value = 0.0;
  std::vector<std::pair<double, double>> trace;  // (lambda, value)
  bool richardson = false;
  bool nonconvergent = false;
  DiscountedSolution last;  // solution at the smallest lambda
};

VanishingDiscountResult vanishing_discount_value(const ZeroSumStageGame& g,
                                                 const std::vector<double>& schedule);

}  // namespace abg
