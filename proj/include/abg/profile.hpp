#pragma once

#include "abg/machine.hpp"
#include "abg/pipeline.hpp"

#include <vector>

namespace abg {

enum class ConstructionTag { Case1, Case2, Case3Soft, ExampleFixture };
const char* construction_name(ConstructionTag t);

struct ParameterLedger {
  double epsilon = 0.0;
  double v[2] = {0.0, 0.0};
  double r_star[2] = {0.0, 0.0};  // conditional absorbing payoffs of the main profile
  double eta = 0.0;
  long N = 0;
  double delta = 0.0;
  long B = 0;  // test block length, 0 when no test is run
  long K = 0;
  double kappa = 0.0;
  double eta_test = 0.0;
  double p_main = 0.0;            // absorption probability of the main profile
  double block_absorption = 0.0;  // 1-(1-p_main)^B
  double bound = 1.0;             // payoff bound M
  int player = -1;                // player i of Case 2 / 3-soft
  int action = -1;                // absorbing action of player i
  MixedProfile main_profile;      // x0 or x_hat
  std::vector<Check> inequalities;
};

struct EquilibriumProfile {
  StrategyMachine machine[2];
  double target_epsilon = 0.0;
  double gain_bound = 0.0;  // 2 eps for Cases 1 and 2, eps for case 3-soft
  ConstructionTag tag = ConstructionTag::Case1;
  ParameterLedger ledger;
  MixedAction punisher[2];  // punisher[j]: what player j plays when punishing
};

}  // namespace abg
