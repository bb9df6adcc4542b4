#pragma once

#include "abg/game.hpp"

#include <string>
#include <variant>
#include <vector>

namespace abg {

struct StatTestSpec {
  MixedAction reference;  // expected frequencies of the monitored player
  long block_length = 1;  // B
  long blocks = 1;        // K, blocks counted from phase entry
  double kappa = 0.0;
  double false_positive_budget = 0.0;
};

// kappa = sqrt(ln(2 |A| K / eta_test) / (2 B)).
StatTestSpec statistical_test_params(const MixedAction& x_ref, long blocks, double eta_test,
                                     long block_length);
double hoeffding_kappa(int num_actions, long blocks, double eta_test, long block_length);

// Fires when the opponent plays an action outside `allowed`.
struct OutOfSupport {
  std::vector<bool> allowed;
  int target = 0;
};
// Runs at the end of each block: fires when some action frequency deviates
// from the reference by more than kappa.
struct FrequencyTest {
  StatTestSpec spec;
  int target = 0;
};
// Fires at the end of every global stage t >= stage.
struct StageExpiry {
  long stage = 1;
  int target = 0;
};

using Trigger = std::variant<OutOfSupport, FrequencyTest, StageExpiry>;

int trigger_target(const Trigger& t);

struct Phase {
  std::string name;
  MixedAction action;
  std::vector<Trigger> triggers;  // evaluated in order, first firing wins
  bool punishment = false;
};

struct StrategyMachine {
  int player = 0;
  std::vector<Phase> phases;
  int initial = 0;

  const Phase& phase(int k) const { return phases[k]; }
  int size() const { return static_cast<int>(phases.size()); }
};

// Throws InvalidArgument on the first broken invariant.
void validate_machine(const StrategyMachine& m, const GameSpec& g);

StrategyMachine stationary_machine(int player, const MixedAction& x, std::string name = "stationary");

// Copy of `m` that switches to pure `action` at the end of stage `after`
// from whatever phase it is in; `after` = 0 gives the pure stationary machine.
StrategyMachine comply_then_deviate(const StrategyMachine& m, long after, int action);

// Next phase given the opponent's action at global stage `stage`.
// Frequency tests are ignored here.
int step_phase(const StrategyMachine& m, int phase, int opp_action, long stage,
               bool skip_expiry = false);

// Execution state for simulation.
class MachineRunner {
 public:
  explicit MachineRunner(const StrategyMachine& m);
  int phase() const { return phase_; }
  const MixedAction& action() const { return m_->phase(phase_).action; }
  // Feeds the stage outcome; returns the index of the trigger that fired in
  // the current phase, or -1.
  int observe(int opp_action, long stage);

 private:
  void enter(int phase, long stage);

  const StrategyMachine* m_;
  int phase_ = 0;
  long entered_ = 1;           // first stage played in the phase
  std::vector<long> counts_;   // opponent action counts in the current block
};

}  // namespace abg
