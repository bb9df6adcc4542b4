#include "abg/errors.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>

using namespace abg;
using namespace abg::testing;

namespace {

GameSpec valid_2x2() {
  return limsup_game(mat({{0, 0.5}, {1, 0}}), mat({{0.2, 0.4}, {0.6, 0.8}}), mat({{0.1, 0.3}, {0.5, 0.7}}),
                     mat({{1, 0}, {0, 1}}), mat({{0, 1}, {1, 0}}));
}

bool mentions(const ValidationError& e, const std::string& needle) {
  for (const auto& v : e.violations())
    if (v.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("validation collects every violation") {
  GameSpec g = valid_2x2();
  g.absorb_prob(0, 1) = 1.2;
  g.absorb_payoff[1](1, 0) = -0.5;
  g.payoff[0].rule = LimsupAverage{mat({{1, 0}, {0, 2}})};
  try {
    validate_game(g);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.violations().size() >= 3);
    CHECK(mentions(e, "probability out of range at (r0,c1)"));
    CHECK(mentions(e, "absorb_payoff2 out of [0,1] at (r1,c0)"));
    CHECK(mentions(e, "nonabs_payoff1 out of [0,1] at (r1,c1)"));
  }
}

TEST_CASE("validation rejects duplicates, missing payoffs and a small bound") {
  GameSpec g = valid_2x2();
  g.actions2 = {"c", "c"};
  CHECK_THROWS_AS(validate_game(g), ValidationError);

  g = valid_2x2();
  g.has_absorb_payoff[0](1, 0) = false;
  try {
    validate_game(g);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(mentions(e, "missing absorb_payoff1 at (r1,c0)"));
  }

  g = valid_2x2();
  g.payoff_bound = 0.5;
  CHECK_THROWS_AS(validate_game(g), ValidationError);
}

TEST_CASE("absent payoffs on never-absorbing cells read as zero") {
  const GameSpec g = big_match(0.3, 0.3);
  CHECK(g.r(0, 0, 0) == 0.0);
  CHECK_FALSE(g.has_absorb_payoff[0](0, 1));
}

TEST_CASE("mixed actions") {
  CHECK_THROWS_AS(MixedAction(Vector::Constant(2, 0.6)), InvalidArgument);
  CHECK_THROWS_AS(mixed({1.5, -0.5}), InvalidArgument);
  const MixedAction x = mixed({0.25, 0.75});
  CHECK(x.support() == std::vector<int>{0, 1});
  CHECK(MixedAction::pure(3, 2).is_pure());
  const MixedAction m = x.mix(MixedAction::pure(2, 0), 0.5);
  CHECK(m[0] == doctest::Approx(0.625));
  // weights below the support threshold are dropped
  Vector w(2);
  w << 1.0 - 1e-16, 1e-16;
  CHECK(MixedAction(w).is_pure());
}

TEST_CASE("absorption probability and conditional absorbing payoff") {
  const GameSpec g = valid_2x2();
  const MixedProfile x{mixed({0.5, 0.5}), mixed({0.5, 0.5})};
  // p = (0 + 0.5 + 1 + 0)/4
  CHECK(absorption_prob(x, g) == doctest::Approx(0.375));
  // (0.5*0.4 + 1*0.6) / 1.5
  CHECK(conditional_absorbing_payoff(x, 0, g) == doctest::Approx(0.8 / 1.5));
  const MixedProfile never{MixedAction::pure(2, 0), MixedAction::pure(2, 0)};
  CHECK_THROWS_AS(conditional_absorbing_payoff(never, 0, g), NonAbsorbingProfile);
  // nonabsorbing: i.i.d. value of z at (r0,c0)
  CHECK(stationary_payoff(never, 0, g) == 1.0);
  CHECK(stationary_payoff(never, 1, g) == 0.0);
  CHECK(stationary_payoff(x, 1, g) == doctest::Approx((0.5 * 0.3 + 1.0 * 0.5) / 1.5));
}

TEST_CASE("stationary payoff of omega-regular kinds needs a single cell") {
  GameSpec g = big_match(0.3, 0.3);
  g.payoff[0].rule = CoBuchi{{JointAction{0, 0}}, 1.0, 0.0};
  g = validate_game(g);
  const MixedProfile cl{MixedAction::pure(2, 0), MixedAction::pure(2, 0)};
  const MixedProfile cr{MixedAction::pure(2, 0), MixedAction::pure(2, 1)};
  CHECK(stationary_payoff(cl, 0, g) == 0.0);  // target visited forever
  CHECK(stationary_payoff(cr, 0, g) == 1.0);
  const MixedProfile mix{MixedAction::pure(2, 0), mixed({0.5, 0.5})};
  CHECK_THROWS_AS(stationary_payoff(mix, 0, g), UnsupportedExactEvaluation);
}

TEST_CASE("run evaluation: absorbed prefix is exact") {
  const GameSpec g = valid_2x2();
  RunPrefix run{{{0, 0}, {1, 0}}, 2};
  const RunEstimate e = evaluate_run(run, g, 1);
  CHECK(e.exact);
  CHECK(e.value == 0.5);
  run.absorbed_at = 1;
  CHECK_THROWS_AS(evaluate_run(run, g, 0), InvalidArgument);
}

TEST_CASE("run evaluation: window average over the last half") {
  const GameSpec g = valid_2x2();
  RunPrefix run;
  // stages 1..4 at (r0,c1) paying z1 = 0, stages 5..8 at (r0,c0) paying 1
  for (int t = 0; t < 4; ++t) run.stages.push_back({0, 1});
  for (int t = 0; t < 4; ++t) run.stages.push_back({0, 0});
  const RunEstimate e = evaluate_run(run, g, 0);
  CHECK_FALSE(e.exact);
  CHECK(e.value == 1.0);
  CHECK(evaluate_run(run, g, 0, 1.0).value == 0.5);
  CHECK(window_start(8, 0.5) == 5);
  CHECK(window_start(7, 0.5) == 4);
  CHECK(window_start(3, 0.01) == 3);
}

TEST_CASE("tail estimator kinds") {
  PayoffSpec even{EvenStageLimsupAverage{mat({{1, 0}})}, {}};
  TailEstimator te(even, 4, 1.0);
  te.feed(1, {0, 1});
  te.feed(2, {0, 0});
  te.feed(3, {0, 0});
  te.feed(4, {0, 1});
  CHECK(te.value() == 0.5);  // stages 2 and 4

  PayoffSpec stage{LimsupStage{mat({{0.2, 0.7}})}, {}};
  TailEstimator ts(stage, 3, 1.0);
  ts.feed(1, {0, 1});
  ts.feed(2, {0, 0});
  ts.feed(3, {0, 0});
  CHECK(ts.value() == 0.7);

  PayoffSpec buchi{Buchi{{JointAction{0, 1}}, 1.0, 0.25}, {}};
  TailEstimator tb(buchi, 4, 0.5);
  tb.feed(1, {0, 1});  // before the window
  tb.feed(3, {0, 0});
  tb.feed(4, {0, 0});
  CHECK(tb.value() == 0.25);

  TailEstimator empty(even, 1, 1.0);
  empty.feed(1, {0, 0});
  CHECK_THROWS_AS(empty.value(), EmptyWindow);
}

TEST_CASE("payoff kinds and ranges") {
  PayoffSpec c{ConstantPayoff{0.4}, {}};
  CHECK(std::string(payoff_kind(c)) == "constant");
  CHECK(payoff_range(c) == std::pair{0.4, 0.4});
  PayoffSpec cb{CoBuchi{{}, 0.9, 0.1}, {}};
  CHECK(std::string(payoff_kind(cb)) == "co-buchi");
  CHECK(payoff_range(cb) == std::pair{0.1, 0.9});
}
