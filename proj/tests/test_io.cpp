#include "abg/errors.hpp"
#include "abg/io.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>

using namespace abg;
using namespace abg::testing;

namespace {

std::string violations_of(const std::string& text) {
  try {
    parse_game_text(text);
  } catch (const ValidationError& e) {
    std::string all;
    for (const auto& v : e.violations()) all += v + "\n";
    return all;
  }
  return "";
}

const char* kSmall = R"({
  "schema": "absorbing-game/v1",
  "actions1": ["T", "B"],
  "actions2": ["L", "R"],
  "absorb_prob": [["1/3", 0], ["0.25", 1]],
  "absorb_payoff1": [[1, null], [0, "2/5"]],
  "absorb_payoff2": [[0, null], [1, 0.5]],
  "nonabs_payoff1": {"kind": "limsup-average", "z": [[0, 1], [1, 0]]},
  "nonabs_payoff2": {"kind": "constant", "value": "1/2"}
})";

}  // namespace

TEST_CASE("canonical fixtures round-trip byte for byte") {
  for (const char* name : {"bigmatch.game", "bigmatch_hard.game", "exabs.game", "zerosum_bigmatch.game",
                           "all_absorbing.game", "never_absorbing.game", "case2.game", "case2_tested.game"}) {
    INFO(name);
    const std::string bytes = read_file(fixture_path(name));
    CHECK(serialize_game(parse_game_text(bytes)) == bytes);
  }
}

TEST_CASE("fractions and decimal strings") {
  const GameSpec g = parse_game_text(kSmall);
  CHECK(g.p(0, 0) == 1.0 / 3.0);
  CHECK(g.p(1, 0) == 0.25);
  CHECK(g.r(0, 1, 1) == 2.0 / 5.0);
  CHECK_FALSE(g.has_absorb_payoff[0](0, 1));
  CHECK(std::get<ConstantPayoff>(g.payoff[1].rule).value == 0.5);
  CHECK(g.payoff_bound == 1.0);
  // the canonical text parses back to the same game
  const GameSpec h = parse_game_text(serialize_game(g));
  CHECK(h.absorb_prob == g.absorb_prob);
  CHECK(serialize_game(h) == serialize_game(g));
}

TEST_CASE("out-of-range probability is reported at its cell") {
  try {
    parse_game_file(fixture_path("invalid_prob.game"));
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    REQUIRE(e.violations().size() == 1);
    CHECK(e.violations()[0] == "absorb_prob[0][0]: value 1.2 outside [0,1]");
  }
}

TEST_CASE("schema errors") {
  std::string t = kSmall;
  t.replace(t.find("\"schema\""), 8, "\"colour\": 1, \"schema\"");
  CHECK(violations_of(t).find("unknown field 'colour'") != std::string::npos);

  t = kSmall;
  t.replace(t.find("absorbing-game/v1"), 17, "absorbing-game/v9");
  CHECK(violations_of(t).find("expected schema") != std::string::npos);

  t = kSmall;
  t.replace(t.find("\"1/3\""), 5, "\"1/0\"");
  CHECK(violations_of(t).find("absorb_prob[0][0]") != std::string::npos);

  t = kSmall;
  t.replace(t.find("limsup-average"), 14, "sometimes");
  CHECK(violations_of(t).find("unknown payoff kind 'sometimes'") != std::string::npos);

  t = kSmall;
  t.replace(t.find("[[1, null]"), 10, "[[1, 0, 0]");
  CHECK(violations_of(t).find("absorb_payoff1[0]: expected 2 entries") != std::string::npos);

  // p > 0 with no absorbing payoff
  t = kSmall;
  t.replace(t.find("[[0, null]"), 10, "[[null, 0]");
  CHECK(violations_of(t).find("missing absorb_payoff2") != std::string::npos);
}

TEST_CASE("malformed JSON reports line and column") {
  const std::string v = violations_of("{\n  \"schema\": \"absorbing-game/v1\",\n  \"actions1\": [,\n}");
  CHECK(v.find("line 3, column") != std::string::npos);
  CHECK(v.find("malformed JSON") != std::string::npos);
}

TEST_CASE("omega-regular payoffs and declared values") {
  const GameSpec g = fixture("exabs.game");
  const auto& cb = std::get<CoBuchi>(g.payoff[0].rule);
  REQUIRE(cb.target.size() == 1);
  CHECK(cb.target[0] == JointAction{0, 0});
  CHECK(g.payoff[0].declared_minmax == 0.0);
  CHECK(g.payoff[1].declared_minmax == 0.5);
}

TEST_CASE("numbers and digests") {
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
  CHECK(format_number(1e-20) == "1e-20");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("report envelope") {
  const std::string bytes = read_file(fixture_path("bigmatch.game"));
  const GameSpec g = parse_game_text(bytes);
  const Json h = report_header("solve", "bigmatch.game", bytes, g);
  CHECK(h["schema"] == kReportSchema);
  CHECK(h["command"] == "solve");
  CHECK(h["input"]["sha256"] == sha256_hex(bytes));
  CHECK(h["game"]["actions1"][1] == "Q");
  const Json mm = to_json(minmax_values(g), g);
  CHECK(mm["players"][0]["method"] == "vanishing-discount");
  CHECK(mm["players"][0]["discount_trace"].size() == 20);
}

TEST_CASE("profiles serialize their machines and ledger") {
  const GameSpec g = fixture("case2_tested.game");
  const PipelineResult pr = run_pipeline(g, 0.1);
  BuildOptions opt;
  opt.certify = false;
  const BuildResult b = build_and_certify(pr, g, 0.1, opt);
  const Json j = to_json(b.profile, g);
  const std::string text = j.dump();
  CHECK(text.find("frequency-test") != std::string::npos);
  CHECK(text.find("stage-expiry") != std::string::npos);
  CHECK(text.find("kappa") != std::string::npos);
  // non-finite numbers never reach the JSON as bare tokens
  CHECK_NOTHROW(Json::parse(text));
}
