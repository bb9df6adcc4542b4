#include "abg/errors.hpp"
#include "abg/machine.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace abg;
using namespace abg::testing;

namespace {

// Player 1 machine: main phase tests player 2 against `ref`, punishes by
// playing C forever.
StrategyMachine tester(const MixedAction& ref, long B, long K, double kappa, long expiry) {
  StrategyMachine m;
  m.player = 0;
  StatTestSpec spec{ref, B, K, kappa, 0.01};
  m.phases.push_back(Phase{"main", mixed({0.5, 0.5}),
                           {OutOfSupport{{true, false}, 1}, FrequencyTest{spec, 1}, StageExpiry{expiry, 1}},
                           false});
  m.phases.push_back(Phase{"punish", MixedAction::pure(2, 0), {}, true});
  return m;
}

}  // namespace

TEST_CASE("Hoeffding kappa") {
  // sqrt(ln(2 * 2 * 10 / 0.05) / (2 * 1000))
  CHECK(hoeffding_kappa(2, 10, 0.05, 1000) == doctest::Approx(std::sqrt(std::log(800.0) / 2000.0)));
  const StatTestSpec s = statistical_test_params(mixed({0.3, 0.7}), 10, 0.05, 1000);
  CHECK(s.kappa == doctest::Approx(hoeffding_kappa(2, 10, 0.05, 1000)));
  CHECK(s.block_length == 1000);
  CHECK(s.blocks == 10);
  CHECK_THROWS_AS(statistical_test_params(mixed({0.3, 0.7}), 10, 0.05, 2), KappaOutOfRange);
  CHECK_THROWS_AS(statistical_test_params(mixed({0.3, 0.7}), 0, 0.05, 100), InvalidArgument);
  CHECK_THROWS_AS(statistical_test_params(mixed({0.3, 0.7}), 1, 1.5, 100), InvalidArgument);
}

TEST_CASE("machine validation") {
  const GameSpec g = big_match(0.3, 0.3);
  StrategyMachine m = tester(mixed({0.5, 0.5}), 10, 3, 0.2, 100);
  CHECK_NOTHROW(validate_machine(m, g));

  StrategyMachine bad = m;
  bad.phases[1].triggers.push_back(StageExpiry{5, 0});
  CHECK_THROWS_AS(validate_machine(bad, g), InvalidArgument);  // punishment must be terminal

  bad = m;
  std::get<StageExpiry>(bad.phases[0].triggers[2]).target = 7;
  CHECK_THROWS_AS(validate_machine(bad, g), InvalidArgument);

  bad = m;
  std::swap(bad.phases[0].triggers[0], bad.phases[0].triggers[1]);
  CHECK_THROWS_AS(validate_machine(bad, g), InvalidArgument);  // support check after the test

  bad = m;
  bad.phases[0].action = MixedAction::uniform(3);
  CHECK_THROWS_AS(validate_machine(bad, g), InvalidArgument);

  bad = m;
  bad.initial = 2;
  CHECK_THROWS_AS(validate_machine(bad, g), InvalidArgument);
}

TEST_CASE("step_phase: out-of-support fires first, expiry at stage >= T") {
  const StrategyMachine m = tester(mixed({0.5, 0.5}), 10, 3, 0.2, 100);
  CHECK(step_phase(m, 0, 1, 5) == 1);
  CHECK(step_phase(m, 0, 0, 5) == 0);
  CHECK(step_phase(m, 0, 0, 99) == 0);
  CHECK(step_phase(m, 0, 0, 100) == 1);
  CHECK(step_phase(m, 0, 0, 150) == 1);
  CHECK(step_phase(m, 0, 0, 150, true) == 0);
  CHECK(step_phase(m, 1, 1, 5) == 1);
}

TEST_CASE("runner: frequency test at block ends only") {
  const StrategyMachine m = tester(mixed({0.5, 0.5}), 4, 2, 0.3, 1000);
  MachineRunner run(m);
  // block 1: L L L L, frequency 1 vs 0.5 -> fires at stage 4
  CHECK(run.observe(0, 1) == -1);
  CHECK(run.observe(0, 2) == -1);
  CHECK(run.observe(0, 3) == -1);
  CHECK(run.observe(0, 4) == 1);
  CHECK(run.phase() == 1);
  CHECK(run.action()[0] == 1.0);
}

TEST_CASE("runner: balanced blocks pass and testing stops after K blocks") {
  // out-of-support disabled: both actions allowed
  StrategyMachine m = tester(mixed({0.5, 0.5}), 4, 2, 0.3, 1000);
  std::get<OutOfSupport>(m.phases[0].triggers[0]).allowed = {true, true};
  MachineRunner run(m);
  long t = 1;
  for (int blk = 0; blk < 2; ++blk)
    for (int k = 0; k < 4; ++k) CHECK(run.observe(k % 2, t++) == -1);
  // third block would fail but is past K
  for (int k = 0; k < 4; ++k) CHECK(run.observe(0, t++) == -1);
  CHECK(run.phase() == 0);
  // expiry
  CHECK(run.observe(0, 1000) == 2);
  CHECK(run.phase() == 1);
}

TEST_CASE("runner: out-of-support action") {
  const StrategyMachine m = tester(mixed({1.0, 0.0}), 4, 2, 0.3, 1000);
  MachineRunner run(m);
  CHECK(run.observe(0, 1) == -1);
  CHECK(run.observe(1, 2) == 0);
  CHECK(run.phase() == 1);
}

TEST_CASE("comply-then-deviate") {
  const StrategyMachine base = tester(mixed({0.5, 0.5}), 4, 2, 0.3, 1000);
  const StrategyMachine now = comply_then_deviate(base, 0, 1);
  CHECK(now.size() == 1);
  CHECK(now.phase(0).action[1] == 1.0);

  const StrategyMachine later = comply_then_deviate(base, 10, 1);
  REQUIRE(later.size() == 3);
  CHECK(later.phase(2).action[1] == 1.0);
  // every phase, including the former punishment, now leaves at stage 10
  for (int k = 0; k < 2; ++k) {
    CHECK(std::get<StageExpiry>(later.phase(k).triggers.front()).stage == 10);
    CHECK_FALSE(later.phase(k).punishment);
  }
  MachineRunner run(later);
  for (long t = 1; t < 10; ++t) CHECK(run.observe(0, t) == (t == 4 ? 2 : -1));
  // punished at stage 4 (block of L), still switches at 10
  CHECK(run.phase() == 1);
  run.observe(0, 10);
  CHECK(run.phase() == 2);
}

TEST_CASE("stationary machine") {
  const StrategyMachine m = stationary_machine(1, mixed({0.2, 0.8}), "y");
  CHECK(m.player == 1);
  CHECK(m.size() == 1);
  CHECK(m.phase(0).name == "y");
  CHECK(trigger_target(Trigger{StageExpiry{3, 4}}) == 4);
}
