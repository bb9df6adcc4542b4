// Acceptance run: one PASS/FAIL line per criterion.
//
//   abg_acceptance [--expect-fail N]... [--only N]...
//
// Exit status is 0 when every criterion passes or fails only where expected.

#include "abg/builder.hpp"
#include "abg/discounted.hpp"
#include "abg/errors.hpp"
#include "abg/io.hpp"
#include "support/fixtures.hpp"
#include "support/fuzz.hpp"
#include "support/oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace abg;
using namespace abg::testing;

namespace {

constexpr double kEps = 0.1;

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct FuzzEntry {
  int index = 0;
  GameSpec game;
  std::optional<PipelineResult> pr;
  std::string pipeline_error;
  std::optional<BuildResult> build;
  std::string build_error;
};

struct FuzzSuite {
  std::vector<FuzzEntry> games;
  double pipeline_seconds = 0.0;
  double build_seconds = 0.0;
};

const FuzzSuite& fuzz_suite() {
  static const FuzzSuite suite = [] {
    FuzzSuite s;
    std::mt19937_64 rng(kFuzzSeed);
    for (int k = 0; k < kFuzzGames; ++k) {
      FuzzEntry e;
      e.index = k;
      e.game = random_game(rng);
      s.games.push_back(std::move(e));
    }
    auto t0 = Clock::now();
    for (auto& e : s.games) {
      try {
        e.pr = run_pipeline(e.game, kEps);
      } catch (const std::exception& ex) {
        e.pipeline_error = ex.what();
      }
    }
    s.pipeline_seconds = seconds_since(t0);
    t0 = Clock::now();
    for (auto& e : s.games) {
      if (!e.pr || e.pr->report.tag == CaseTag::Case3Hard) continue;
      try {
        e.build = build_and_certify(*e.pr, e.game, kEps);
      } catch (const std::exception& ex) {
        e.build_error = ex.what();
      }
    }
    s.build_seconds = seconds_since(t0);
    return s;
  }();
  return suite;
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

int run_cli(const std::string& args, std::string* out = nullptr) {
  FILE* p = popen((std::string(ABG_CLI) + " " + args + " 2>&1").c_str(), "r");
  if (!p) return -1;
  char buf[4096];
  std::size_t n;
  std::string text;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) text.append(buf, n);
  const int status = pclose(p);
  if (out) *out = text;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// exabs end to end
Outcome criterion1() {
  const auto t0 = Clock::now();
  const GameSpec g = fixture("exabs.game");
  const MinmaxReport mm = minmax_values(g);
  const PipelineResult pr = run_pipeline(g, kEps);
  const BuildResult b = build_and_certify(pr, g, kEps);
  const double secs = seconds_since(t0);

  const MixedAction pun = mixed({kEps, 1.0 - kEps});
  const BestResponse br = best_response_bound(stationary_machine(1, pun), 0, default_families(), g);

  const auto& c = b.certificate;
  const bool ok = std::abs(mm.v(0)) <= 1e-6 && mm.player[0].residual <= 1e-6 && pr.report.tag == CaseTag::Case1 &&
                  std::abs(pr.report.x0.x1[1] - 1.0) <= 1e-6 && std::abs(pr.report.x0.x2[1] - 1.0) <= 1e-6 &&
                  c.certified && c.on_path.method == EvalMethod::Exact && std::abs(c.on_path.payoff[0]) <= 1e-6 &&
                  std::abs(c.on_path.payoff[1] - 1.0) <= 1e-6 && br.value <= kEps + 1e-6 && secs < 1.0;
  return {ok, fmt("v1 = %.3g (residual %.1e), %s at x0 = (Q,R), payoffs (%.6g, %.6g), certified %s, "
                  "BR vs epsL+(1-eps)R = %.6g, %.3f s",
                  mm.v(0) + 0.0, mm.player[0].residual, case_name(pr.report.tag), c.on_path.payoff[0] + 0.0,
                  c.on_path.payoff[1], c.certified ? "yes" : "no", br.value, secs)};
}

// sandwich on the fuzz suite
Outcome criterion2() {
  const FuzzSuite& s = fuzz_suite();
  int good = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& e : s.games) {
    if (!e.pr) continue;
    bool ok = true;
    for (int i = 0; i < 2; ++i) {
      const double v = e.pr->minmax.v(i), vi = e.pr->aux_minmax.v_inf[i];
      const double slack = std::min(vi - (v - kEps), v - vi);
      worst = std::min(worst, slack);
      ok = ok && slack >= -kSandwichTol;
    }
    good += ok;
  }
  const bool pass = good == kFuzzGames && s.pipeline_seconds < 120.0;
  return {pass, fmt("%d/%d games, worst slack %.2e, pipeline %.1f s", good, kFuzzGames, worst, s.pipeline_seconds)};
}

// zero-sum Big Match against 1/2
Outcome criterion3() {
  const GameSpec g = fixture("zerosum_bigmatch.game");
  const ZeroSumStageGame zs = zero_sum_view(stage_game_of(g), 0);
  double worst = 0.0, worst_quit = 0.0;
  for (double lam : default_lambda_schedule()) {
    const auto s = shapley_discounted_value(zs, lam);
    worst = std::max(worst, std::abs(s.value - 0.5));
    // optimal quitting probability lambda / (1 + lambda)
    worst_quit = std::max(worst_quit, std::abs(s.stage.row_optimal[1] - lam / (1.0 + lam)));
  }
  const double lim = vanishing_discount_value(zs, default_lambda_schedule()).value;
  const bool pass = worst <= 1e-9 && std::abs(lim - 0.5) <= 1e-6;
  return {pass, fmt("max |v_lambda - 1/2| = %.1e over 20 factors, quit prob error %.1e, limit %.10g", worst,
                    worst_quit, lim)};
}

// trace residuals through the closed form
Outcome criterion4() {
  const FuzzSuite& s = fuzz_suite();
  long entries = 0, bad = 0;
  double worst = 0.0;
  for (const auto& e : s.games) {
    if (!e.pr) continue;
    GameSpec spec = e.game;
    for (int i = 0; i < 2; ++i) spec.payoff[i] = PayoffSpec{ConstantPayoff{e.pr->minmax.v(i) - kEps}, {}};
    for (const TraceEntry& t : e.pr->trace.entries) {
      const double r = oracle::pure_deviation_residual(spec, t.x.x1.weights(), t.x.x2.weights(), t.lambda);
      worst = std::max(worst, r);
      ++entries;
      bad += r > 1e-7;
    }
  }
  return {bad == 0 && entries > 0, fmt("%ld trace entries, %ld above 1e-7, worst %.2e", entries, bad, worst)};
}

// construction inequalities
Outcome criterion5() {
  const FuzzSuite& s = fuzz_suite();
  int built = 0, good = 0;
  for (const auto& e : s.games) {
    if (!e.build) continue;
    ++built;
    const EquilibriumProfile& prof = e.build->profile;
    const ParameterLedger& L = prof.ledger;
    bool ok = true;
    for (const auto& c : check_ledger(prof)) ok = ok && c.pass;
    if (prof.tag == ConstructionTag::Case1) {
      const auto& on = e.build->certificate.on_path;
      for (int i = 0; i < 2; ++i) ok = ok && on.payoff[i] >= L.v[i] - 1.5 * kEps - 1e-9;
      ok = ok && oracle::absorbed_within(L.p_main, L.N) >= 1.0 - L.eta - 1e-12;
    }
    good += ok;
  }
  return {built > 0 && good == built, fmt("%d/%d built profiles", good, built)};
}

// certificates over pure, comply-then-deviate and the 0.05 grid
Outcome criterion6() {
  const FuzzSuite& s = fuzz_suite();
  int eligible = 0, certified = 0, unbuilt = 0;
  double worst_excess = -std::numeric_limits<double>::infinity();
  std::ostringstream refused;
  for (const auto& e : s.games) {
    if (!e.pr || e.pr->report.tag == CaseTag::Case3Hard) continue;
    ++eligible;
    if (!e.build) {
      ++unbuilt;
      refused << (unbuilt > 1 ? "," : "") << e.index;
      continue;
    }
    const auto& c = e.build->certificate;
    for (int i = 0; i < 2; ++i) worst_excess = std::max(worst_excess, c.player[i].gain - c.bound);
    certified += c.certified;
  }
  const bool pass = certified == eligible && s.build_seconds < 600.0;
  return {pass, fmt("%d/%d certified, %d without a certifiable stationary punisher (games %s), "
                    "worst gain - bound among built %.2e, %.1f s",
                    certified, eligible, unbuilt, refused.str().c_str(), worst_excess, s.build_seconds)};
}

// Case3Hard fixture
Outcome criterion7() {
  std::string out;
  const int code = run_cli("classify " + fixture_path("bigmatch_hard.game"), &out);
  const GameSpec g = fixture("bigmatch_hard.game");
  const MinmaxReport mm = minmax_values(g);
  const double v[2] = {mm.v(0), mm.v(1)};
  const DifficultConditions dc = difficult_conditions(g, v, safe_polytope(g, 0, v[0]), safe_polytope(g, 1, v[1]));
  const oracle::GridMargins gm = oracle::grid_margins(g, v, 0.02);
  const double diff = std::max({std::abs(dc.max_pair_absorption - gm.pair_absorption),
                                std::abs(dc.max_good_response_mass[0] - gm.good_response_mass[0]),
                                std::abs(dc.max_good_response_mass[1] - gm.good_response_mass[1])});
  const bool evidence = out.find("no-absorption conditions") != std::string::npos;
  const bool pass = code == 3 && evidence && dc.holds && gm.y_nonempty[0] && gm.y_nonempty[1] && diff <= 1e-9;
  return {pass, fmt("exit %d, conditions %s, margins (%.3g, %.3g, %.3g), grid 0.02 differs by %.1e", code,
                    dc.holds ? "hold" : "fail", dc.max_pair_absorption, dc.max_good_response_mass[0],
                    dc.max_good_response_mass[1], diff)};
}

struct Sample {
  std::string name;
  EquilibriumProfile profile;
  GameSpec game;
};

std::vector<Sample> sample_profiles() {
  std::vector<Sample> out;
  auto short_horizon = [](const EquilibriumProfile& p) {
    return std::max(machine_horizon(p.machine[0]), machine_horizon(p.machine[1])) <= 200;
  };
  for (const char* name : {"exabs.game", "all_absorbing.game", "bigmatch.game", "case2.game", "case2_tested.game"}) {
    const GameSpec g = fixture(name);
    const BuildResult b = build_and_certify(run_pipeline(g, kEps), g, kEps);
    if (short_horizon(b.profile)) out.push_back({name, b.profile, g});
  }
  for (const auto& e : fuzz_suite().games) {
    if (out.size() >= 20) break;
    if (!e.build || e.build->certificate.on_path.method != EvalMethod::Exact) continue;
    if (!short_horizon(e.build->profile)) continue;
    out.push_back({"fuzz " + std::to_string(e.index), e.build->profile, e.game});
  }
  return out;
}

// exact against Monte Carlo
Outcome criterion8() {
  const auto samples = sample_profiles();
  int inside = 0, exact = 0;
  std::ostringstream misses;
  std::uint64_t seed = 1;
  for (const auto& s : samples) {
    const auto& m = s.profile.machine;
    ExactOptions eo;
    for (long t = 1000; t <= 1024000; t *= 2) eo.probes.push_back(t);
    const EvaluationResult ev = exact_profile_value(m[0], m[1], s.game, eo);
    if (ev.method != EvalMethod::Exact) continue;
    ++exact;
    // long enough that truncated runs carry at most 1e-4 of the absorption mass
    long tmax = std::max(1000L, 4 * std::max(machine_horizon(m[0]), machine_horizon(m[1])));
    for (const auto& [t, mass] : ev.absorbed_by)
      if (t >= tmax && mass >= ev.absorption_prob - 1e-4) {
        tmax = t;
        break;
      }
    const SimulationReport sim = monte_carlo(m[0], m[1], s.game, 100000, tmax, seed++);
    bool ok = true;
    for (int i = 0; i < 2; ++i) ok = ok && std::abs(sim.mean[i] - ev.payoff[i]) <= sim.ci99[i] + 1e-12;
    inside += ok;
    if (!ok) misses << " [" << s.name << "]";
  }
  const bool pass = samples.size() == 20 && exact == 20 && inside >= 19;
  return {pass, fmt("%d/%d profiles inside the 99%% interval (%d exact)%s", inside,
                    static_cast<int>(samples.size()), exact, misses.str().c_str())};
}

// false punishment on path
Outcome criterion9() {
  const auto t0 = Clock::now();
  std::ostringstream detail;
  bool pass = true;
  int tested = 0;
  for (const char* name : {"case2_tested.game"}) {
    const GameSpec g = fixture(name);
    const BuildResult b = build_and_certify(run_pipeline(g, kEps), g, kEps);
    const auto& prof = b.profile;
    if (prof.ledger.B == 0) continue;
    ++tested;
    const long runs = 10000;
    // frequency tests only run inside the first K blocks
    const long tmax = prof.ledger.B * prof.ledger.K;
    const SimulationReport sim = monte_carlo(prof.machine[0], prof.machine[1], g, runs, tmax, 12345);
    const double eta = prof.ledger.eta_test;
    const double freq = static_cast<double>(sim.frequency_test_runs) / runs;
    const double se = std::sqrt(eta * (1.0 - eta) / runs);
    const bool ok = freq <= eta + 3.0 * se;
    pass = pass && ok;
    detail << fmt("%s%s: B = %ld, K = %ld, %ld/%ld runs punished (%.4f <= %.4f + 3 x %.4f), ", tested > 1 ? "; " : "", name,
                  prof.ledger.B, prof.ledger.K, sim.frequency_test_runs, runs, freq, eta, se);
  }
  detail << fmt("%.2f s", seconds_since(t0));
  return {pass && tested > 0, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected, only;
  for (int k = 1; k < argc; ++k) {
    if (std::strcmp(argv[k], "--expect-fail") == 0 && k + 1 < argc) {
      expected.insert(std::atoi(argv[++k]));
    } else if (std::strcmp(argv[k], "--only") == 0 && k + 1 < argc) {
      only.insert(std::atoi(argv[++k]));
    } else {
      std::fprintf(stderr, "usage: %s [--expect-fail N]... [--only N]...\n", argv[0]);
      return 2;
    }
  }
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3,
                                                          criterion4, criterion5, criterion6,
                                                          criterion7, criterion8, criterion9};
  int unexpected = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const bool known = expected.count(id) > 0;
    const char* tag = o.pass ? (known ? "PASS (expected FAIL)" : "PASS") : (known ? "FAIL (known)" : "FAIL");
    std::printf("criterion %d: %s  %s\n", id, tag, o.detail.c_str());
    std::fflush(stdout);
    unexpected += o.pass == known;
  }
  return unexpected == 0 ? 0 : 1;
}
