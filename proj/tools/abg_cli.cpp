// abg: minmax values, case classification, equilibrium construction and
// verification for two-player absorbing games.

#include "abg/errors.hpp"
#include "abg/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace abg;

enum Exit { kOk = 0, kUsage = 1, kUnsupported = 2, kHard = 3, kRefuted = 4, kInconsistent = 5 };

struct Flags {
  std::string game;
  double epsilon = 0.1;
  double tol = kClassifyTol;
  std::string schedule;
  long runs = 10000;
  std::uint64_t seed = 1;
  long tmax = 0;  // 0: derived from the machines
  std::string families = "pure,comply,grid";
  std::string out;
};

std::vector<double> parse_schedule(const std::string& s) {
  std::vector<double> out;
  if (s.empty() || s == "default") return out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    double x = 0.0;
    try {
      std::size_t used = 0;
      x = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InvalidArgument("bad --lambda-schedule entry '" + tok + "'");
    }
    if (!(x > 0.0 && x < 1.0)) throw InvalidArgument("--lambda-schedule entries must lie in (0,1)");
    if (!out.empty() && x >= out.back()) throw InvalidArgument("--lambda-schedule must be strictly decreasing");
    out.push_back(x);
  }
  if (out.size() < 3) throw InvalidArgument("--lambda-schedule needs at least 3 entries");
  return out;
}

void emit(const Flags& f, const Json& report) {
  if (f.out.empty()) return;
  std::ofstream o(f.out);
  if (!o) throw Error("cannot write '" + f.out + "'");
  o << report.dump(2) << "\n";
}

std::string mix_text(const MixedAction& x, const std::vector<std::string>& labels) {
  std::ostringstream s;
  bool first = true;
  for (int k = 0; k < x.size(); ++k) {
    if (x[k] <= 0.0) continue;
    if (!first) s << " + ";
    first = false;
    if (x[k] < 1.0) s << x[k] << " ";
    s << labels[k];
  }
  return s.str();
}

std::string profile_text(const MixedProfile& x, const GameSpec& g) {
  return "(" + mix_text(x.x1, g.actions1) + ", " + mix_text(x.x2, g.actions2) + ")";
}

long default_tmax(const EquilibriumProfile& prof) {
  const long h = std::max(machine_horizon(prof.machine[0]), machine_horizon(prof.machine[1]));
  return std::max(1000L, 4 * h);
}

int cmd_solve(const Flags& f) {
  const std::string bytes = read_file(f.game);
  const GameSpec g = parse_game_text(bytes);
  const MinmaxReport mm = minmax_values(g, parse_schedule(f.schedule));
  Json rep = report_header("solve", f.game, bytes, g);
  rep["minmax"] = to_json(mm, g);
  emit(f, rep);
  for (int i = 0; i < 2; ++i)
    std::printf("v%d = %.10g  (%s, residual %.2e)\n", i + 1, mm.v(i), method_name(mm.player[i].method),
                mm.player[i].residual);
  return kOk;
}

int print_case(const CaseReport& r, const GameSpec& g) {
  std::printf("case: %s\n", case_name(r.tag));
  std::printf("v = (%.10g, %.10g)  v_inf = (%.10g, %.10g)\n", r.v[0] + 0.0, r.v[1] + 0.0, r.v_inf[0] + 0.0,
              r.v_inf[1] + 0.0);
  std::printf("x0 = %s  p(x0) = %.6g\n", profile_text(r.x0, g).c_str(), r.p0);
  if (r.player >= 0)
    std::printf("absorbing action: player %d plays %s\n", r.player + 1, g.actions(r.player)[r.action].c_str());
  if (r.witness)
    std::printf("witness: player %d plays %s against %s\n", r.witness->player + 1,
                g.actions(r.witness->player)[r.witness->action].c_str(),
                mix_text(r.witness->y_opp, g.actions(opponent(r.witness->player))).c_str());
  for (const auto& c : r.checks)
    std::printf("  [%s] %s: %.6g vs %.6g\n", c.pass ? "ok" : "--", c.name.c_str(), c.lhs, c.rhs);
  if (r.difficult && r.tag == CaseTag::Case3Hard) {
    const DifficultConditions& d = *r.difficult;
    std::printf("no-absorption conditions (all must hold, margin <= %.2g):\n", r.tol);
    std::printf("  [%s] 1: max p(y1, y2) over Y1 x Y2 = %.6g at %s\n", d.cond[0] ? "ok" : "--",
                d.max_pair_absorption, profile_text(d.max_pair, g).c_str());
    std::printf("  [%s] 2: player 2 good absorbing reply mass against Y1 = %.6g\n", d.cond[1] ? "ok" : "--",
                d.max_good_response_mass[0]);
    std::printf("  [%s] 3: player 1 good absorbing reply mass against Y2 = %.6g\n", d.cond[2] ? "ok" : "--",
                d.max_good_response_mass[1]);
  }
  for (const auto& w : r.warnings) std::printf("warning: %s\n", w.c_str());
  return r.tag == CaseTag::Case3Hard ? kHard : kOk;
}

int cmd_classify(const Flags& f) {
  const std::string bytes = read_file(f.game);
  const GameSpec g = parse_game_text(bytes);
  const PipelineResult pr = run_pipeline(g, f.epsilon, f.tol, parse_schedule(f.schedule));
  Json rep = report_header("classify", f.game, bytes, g);
  rep["epsilon"] = f.epsilon;
  rep["pipeline"] = to_json(pr, g);
  emit(f, rep);
  return print_case(pr.report, g);
}

BuildOptions build_options(const Flags& f) {
  BuildOptions opt;
  opt.families = parse_families(f.families);
  opt.verify.mc_seed = f.seed;
  return opt;
}

int cmd_build(const Flags& f, bool certify) {
  const std::string bytes = read_file(f.game);
  const GameSpec g = parse_game_text(bytes);
  const PipelineResult pr = run_pipeline(g, f.epsilon, f.tol, parse_schedule(f.schedule));
  Json rep = report_header(certify ? "build-verify" : "simulate", f.game, bytes, g);
  rep["epsilon"] = f.epsilon;
  rep["pipeline"] = to_json(pr, g);
  if (pr.report.tag == CaseTag::Case3Hard) {
    emit(f, rep);
    print_case(pr.report, g);
    std::printf("no construction for this case\n");
    return kHard;
  }
  BuildOptions opt = build_options(f);
  opt.certify = certify;
  const BuildResult b = build_and_certify(pr, g, f.epsilon, opt);
  const EquilibriumProfile& prof = b.profile;
  rep["profile"] = to_json(prof, g);
  Json pun = Json::array();
  for (int j = 0; j < 2; ++j)
    if (b.punishers.cert[j]) pun.push_back(to_json(*b.punishers.cert[j], g));
  rep["punishers"] = pun;
  rep["deltas_tried"] = b.deltas_tried;
  if (certify) rep["certificate"] = to_json(b.certificate, g);

  const long tmax = f.tmax > 0 ? f.tmax : default_tmax(prof);
  const SimulationReport sim = monte_carlo(prof.machine[0], prof.machine[1], g, f.runs, tmax, f.seed);
  rep["simulation"] = to_json(sim);
  if (!certify) {
    try {
      rep["exact"] = to_json(exact_profile_value(prof.machine[0], prof.machine[1], g));
    } catch (const UnsupportedExactEvaluation& e) {
      rep["exact"] = Json{{"unsupported", e.what()}};
    }
  }
  emit(f, rep);

  std::printf("case: %s  construction: %s\n", case_name(pr.report.tag), construction_name(prof.tag));
  std::printf("main profile = %s  N = %ld", profile_text(prof.ledger.main_profile, g).c_str(), prof.ledger.N);
  if (prof.ledger.B > 0)
    std::printf("  B = %ld  K = %ld  kappa = %.4g", prof.ledger.B, prof.ledger.K, prof.ledger.kappa);
  std::printf("\n");
  for (int j = 0; j < 2; ++j)
    std::printf("punisher of player %d: %s\n", opponent(j) + 1, mix_text(prof.punisher[j], g.actions(j)).c_str());
  std::printf("simulation: %ld runs, mean payoff (%.6g, %.6g) +- (%.2g, %.2g)\n", sim.runs, sim.mean[0], sim.mean[1],
              sim.ci99[0], sim.ci99[1]);
  if (!certify) return kOk;
  const EquilibriumCertificate& c = b.certificate;
  std::printf("on-path payoff (%s) = (%.10g, %.10g)\n", eval_method_name(c.on_path.method), c.on_path.payoff[0],
              c.on_path.payoff[1]);
  for (int i = 0; i < 2; ++i)
    std::printf("player %d best deviation gain %.3e (%s)\n", i + 1, c.player[i].gain,
                c.player[i].best.deviation.description.c_str());
  std::printf("%s: gains %s %.6g within families\n", c.certified ? "certified" : "REFUTED",
              c.certified ? "<=" : "exceed", c.bound);
  return c.certified ? kOk : kRefuted;
}

int run(const std::string& cmd, const Flags& f) {
  try {
    if (cmd == "solve") return cmd_solve(f);
    if (cmd == "classify") return cmd_classify(f);
    if (cmd == "build-verify") return cmd_build(f, true);
    if (cmd == "simulate") return cmd_build(f, false);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "invalid game file '%s':\n", f.game.c_str());
    for (const auto& v : e.violations()) std::fprintf(stderr, "  %s\n", v.c_str());
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const UnsupportedPayoffForMinmax& e) {
    std::fprintf(stderr, "unsupported payoff: %s\n", e.what());
    return kUnsupported;
  } catch (const UnsupportedExactEvaluation& e) {
    std::fprintf(stderr, "unsupported payoff: %s\n", e.what());
    return kUnsupported;
  } catch (const PunisherNotCertified& e) {
    std::fprintf(stderr, "refuted: %s\n", e.what());
    return kRefuted;
  } catch (const Error& e) {
    std::fprintf(stderr, "internal inconsistency: %s\n", e.what());
    return kInconsistent;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Absorbing game solver, equilibrium builder and verifier"};
  app.require_subcommand(1);
  Flags f;
  auto common = [&](CLI::App* sub) {
    sub->add_option("game", f.game, "game file (JSON)")->required();
    sub->add_option("--lambda-schedule", f.schedule, "comma-separated decreasing discount factors");
    sub->add_option("--out", f.out, "write the JSON report here");
  };
  auto eps = [&](CLI::App* sub) {
    sub->add_option("--epsilon", f.epsilon, "target epsilon")->check(CLI::Range(1e-9, 1.0));
    sub->add_option("--tol", f.tol, "classification tolerance")->check(CLI::PositiveNumber);
  };
  auto sim = [&](CLI::App* sub) {
    sub->add_option("--runs", f.runs, "Monte Carlo runs")->check(CLI::PositiveNumber);
    sub->add_option("--seed", f.seed, "Monte Carlo seed");
    sub->add_option("--tmax", f.tmax, "stages per run (default max(1000, 4 x machine horizon))");
  };
  CLI::App* solve = app.add_subcommand("solve", "minmax values");
  common(solve);
  CLI::App* classify = app.add_subcommand("classify", "classify the auxiliary game");
  common(classify);
  eps(classify);
  CLI::App* build = app.add_subcommand("build-verify", "build and certify an epsilon-equilibrium");
  common(build);
  eps(build);
  sim(build);
  build->add_option("--families", f.families, "deviation families: pure,grid[:res],comply,never");
  CLI::App* simulate = app.add_subcommand("simulate", "build the profile and simulate it");
  common(simulate);
  eps(simulate);
  sim(simulate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  return run(cmd, f);
}
