#include "abg/builder.hpp"

#include "abg/errors.hpp"

#include <algorithm>
#include <cmath>

namespace abg {

const char* construction_name(ConstructionTag t) {
  switch (t) {
    case ConstructionTag::Case1:
      return "Case1";
    case ConstructionTag::Case2:
      return "Case2";
    case ConstructionTag::Case3Soft:
      return "Case3Soft";
    case ConstructionTag::ExampleFixture:
      return "ExampleFixture";
  }
  return "?";
}

long choose_N(double p, double eta) {
  if (!(p > 0.0)) throw InvalidArgument("main profile is nonabsorbing; N is undefined");
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("eta must lie in (0,1)");
  if (p >= 1.0) return 1;
  auto ok = [&](long N) { return 1.0 - std::pow(1.0 - p, static_cast<double>(N)) >= 1.0 - eta; };
  long N = std::max(1L, static_cast<long>(std::ceil(std::log(eta) / std::log1p(-p))));
  while (N > 1 && ok(N - 1)) --N;
  while (!ok(N)) ++N;
  return N;
}

namespace {

Check ledger_check(std::string name, double lhs, double rhs) {
  Check c{std::move(name), lhs, rhs, false, false};
  c.pass = lhs >= rhs - 1e-12;
  return c;
}

// (1-eta) r*_i + eta M >= v_i - 3 eps / 2 at eta; the left side is
// nondecreasing in eta because M dominates r*.
bool payoff_inequality(const double r_star[2], const double v[2], double M, double eps, double eta) {
  for (int i = 0; i < 2; ++i)
    if ((1.0 - eta) * r_star[i] + eta * M < v[i] - 1.5 * eps - 1e-12) return false;
  return true;
}

std::vector<bool> support_mask(const MixedAction& x) {
  std::vector<bool> m(x.size(), false);
  for (int a : x.support()) m[a] = true;
  return m;
}

struct MainPlay {
  ConstructionTag tag;
  int player;  // tester i
  int action;
  MixedProfile x_hat;
  MixedAction reference;  // expected frequencies of player -i
  double gain_factor;     // gain bound = factor * eps
  double eta;
};

EquilibriumProfile assemble_tested(const MainPlay& mp, const GameSpec& g, const double v[2], double eps,
                                   double delta, const Punishers& pun, const BuildOptions& opt) {
  const int i = mp.player, mon = opponent(i);
  const double M = g.payoff_bound;
  EquilibriumProfile prof;
  prof.tag = mp.tag;
  prof.target_epsilon = eps;
  prof.gain_bound = mp.gain_factor * eps;
  ParameterLedger& L = prof.ledger;
  L.epsilon = eps;
  L.v[0] = v[0];
  L.v[1] = v[1];
  L.bound = M;
  L.delta = delta;
  L.player = i;
  L.action = mp.action;
  L.main_profile = mp.x_hat;
  L.p_main = absorption_prob(mp.x_hat, g);
  if (!(L.p_main > 0.0)) throw InvalidArgument("main profile is nonabsorbing; delta must be positive");
  for (int j = 0; j < 2; ++j) L.r_star[j] = conditional_absorbing_payoff(mp.x_hat, j, g);
  L.eta = mp.eta;
  if (!payoff_inequality(L.r_star, v, M, eps, L.eta))
    throw DeltaTooLarge("payoff inequality fails at delta = " + std::to_string(delta));
  const long N0 = choose_N(L.p_main, L.eta);

  std::optional<StatTestSpec> spec;
  if (mp.reference.support().size() >= 2) {
    L.eta_test = opt.eta_test_fraction * eps;
    const double kappa_target = opt.kappa_fraction * eps;
    const int na = g.num_actions(mon);
    long K = 1, B = 1;
    for (int it = 0; it < 64; ++it) {
      B = static_cast<long>(std::ceil(std::log(2.0 * na * static_cast<double>(K) / L.eta_test) /
                                      (2.0 * kappa_target * kappa_target)));
      B = std::max(B, 1L);
      if (K * B >= N0) break;
      K = (N0 + B - 1) / B;
    }
    L.B = B;
    L.K = K;
    L.N = K * B;
    L.block_absorption = 1.0 - std::pow(1.0 - L.p_main, static_cast<double>(B));
    if (L.block_absorption > eps / 2.0)
      throw DeltaTooLarge("per-block absorption " + std::to_string(L.block_absorption) + " exceeds eps/2");
    spec = statistical_test_params(mp.reference, K, L.eta_test, B);
    L.kappa = spec->kappa;
  } else {
    L.N = N0;
  }

  StrategyMachine& tester = prof.machine[i];
  tester.player = i;
  Phase main{"main", mp.x_hat.of(i), {}, false};
  main.triggers.push_back(OutOfSupport{support_mask(mp.reference), 1});
  if (spec) main.triggers.push_back(FrequencyTest{*spec, 1});
  main.triggers.push_back(StageExpiry{L.N, 1});
  tester.phases = {main, Phase{"punish", pun.of[i], {}, true}};

  StrategyMachine& other = prof.machine[mon];
  other.player = mon;
  Phase omain{"main", mp.x_hat.of(mon), {}, false};
  omain.triggers.push_back(OutOfSupport{support_mask(mp.x_hat.of(i)), 1});
  omain.triggers.push_back(StageExpiry{L.N, 1});
  other.phases = {omain, Phase{"punish", pun.of[mon], {}, true}};

  prof.punisher[0] = pun.of[0];
  prof.punisher[1] = pun.of[1];
  L.inequalities = check_ledger(prof);
  for (const auto& c : L.inequalities)
    if (!c.pass) throw DeltaTooLarge("ledger inequality '" + c.name + "' fails");
  validate_machine(prof.machine[0], g);
  validate_machine(prof.machine[1], g);
  return prof;
}

}  // namespace

EtaN choose_eta_N_case1(const double r_star[2], double p0, const double v[2], double M, double epsilon) {
  if (!(p0 > 0.0)) throw InvalidArgument("p0 must be positive");
  if (!(M > 0.0)) throw InvalidArgument("payoff bound must be positive");
  const double eta = std::min(epsilon / (2.0 * M), 0.5);
  // Smallest eta satisfying the payoff inequality; the ledger needs it below the cap.
  for (int i = 0; i < 2; ++i) {
    const double need = v[i] - 1.5 * epsilon;
    if (r_star[i] >= need) continue;
    if (M <= r_star[i] || (need - r_star[i]) / (M - r_star[i]) > eta)
      throw InfeasibleEta("no eta <= eps/(2M) satisfies the payoff inequality for player " +
                          std::to_string(i + 1));
  }
  return {eta, choose_N(p0, eta)};
}

Punishers certified_punishers(const GameSpec& g, const MinmaxReport& mm, double epsilon, const VerifyOptions& opt) {
  Punishers p;
  for (int i = 0; i < 2; ++i) {
    std::vector<MixedAction> extra;
    if (mm.player[i].stationary_punisher.size()) extra.push_back(mm.player[i].stationary_punisher);
    const auto cert =
        find_punisher(g, i, mm.v(i), epsilon, mm.player[i].punisher, mm.player[i].safe, opt, extra);
    p.of[opponent(i)] = cert.punisher;
    p.cert[opponent(i)] = cert;
  }
  return p;
}

EquilibriumProfile build_case1(const CaseReport& report, const GameSpec& g, const double v[2], double epsilon,
                               const Punishers& pun) {
  if (report.tag != CaseTag::Case1) throw InvalidArgument("build_case1 needs a Case 1 report");
  for (int j = 0; j < 2; ++j)
    if (!pun.of[j].size()) throw PunisherNotCertified("missing punisher for player " + std::to_string(j + 1));
  const MixedProfile& x0 = report.x0;
  EquilibriumProfile prof;
  prof.tag = ConstructionTag::Case1;
  prof.target_epsilon = epsilon;
  prof.gain_bound = 2.0 * epsilon;
  ParameterLedger& L = prof.ledger;
  L.epsilon = epsilon;
  L.v[0] = v[0];
  L.v[1] = v[1];
  L.bound = g.payoff_bound;
  L.main_profile = x0;
  L.p_main = absorption_prob(x0, g);
  for (int i = 0; i < 2; ++i) L.r_star[i] = conditional_absorbing_payoff(x0, i, g);
  const EtaN en = choose_eta_N_case1(L.r_star, L.p_main, v, g.payoff_bound, epsilon);
  L.eta = en.eta;
  L.N = en.N;
  for (int j = 0; j < 2; ++j) {
    StrategyMachine& m = prof.machine[j];
    m.player = j;
    Phase main{"main", x0.of(j), {}, false};
    main.triggers.push_back(OutOfSupport{support_mask(x0.of(opponent(j))), 1});
    main.triggers.push_back(StageExpiry{L.N, 1});
    m.phases = {main, Phase{"punish", pun.of[j], {}, true}};
    validate_machine(m, g);
  }
  prof.punisher[0] = pun.of[0];
  prof.punisher[1] = pun.of[1];
  L.inequalities = check_ledger(prof);
  for (const auto& c : L.inequalities)
    if (!c.pass) throw InfeasibleEta("ledger inequality '" + c.name + "' fails");
  return prof;
}

EquilibriumProfile build_case2(const CaseReport& report, const GameSpec& g, const double v[2], double epsilon,
                               double delta, const Punishers& pun, const BuildOptions& opt) {
  if (report.tag != CaseTag::Case2) throw InvalidArgument("build_case2 needs a Case 2 report");
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("delta must lie in (0,1]");
  const int i = report.player;
  MainPlay mp;
  mp.tag = ConstructionTag::Case2;
  mp.player = i;
  mp.action = report.action;
  mp.x_hat = make_profile(i, report.x0.of(i).mix(MixedAction::pure(g.num_actions(i), report.action), delta),
                          report.x0.of(opponent(i)));
  mp.reference = report.x0.of(opponent(i));
  mp.gain_factor = 2.0;
  mp.eta = std::min(epsilon / (2.0 * g.payoff_bound), 0.5);
  return assemble_tested(mp, g, v, epsilon, delta, pun, opt);
}

EquilibriumProfile build_case3_soft(const Witness& w, const GameSpec& g, const double v[2], double epsilon,
                                    double delta, const MixedProfile& x0, const Punishers& pun,
                                    const BuildOptions& opt) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("delta must lie in (0,1]");
  const int i = w.player;
  const MixedAction& y = w.y_opp;
  const MixedProfile at = make_profile(i, MixedAction::pure(g.num_actions(i), w.action), y);
  const double pa = absorption_prob(at, g);
  if (!(pa > 0.0)) throw WitnessInvalid("witness is nonabsorbing");
  double ri[2];
  for (int j = 0; j < 2; ++j) {
    ri[j] = conditional_absorbing_payoff(at, j, g);
    if (ri[j] < v[j] - 1e-9)
      throw WitnessInvalid("witness gives player " + std::to_string(j + 1) + " less than the minmax value");
  }
  for (int a = 0; a < g.num_actions(i); ++a) {
    const MixedProfile dev = make_profile(i, MixedAction::pure(g.num_actions(i), a), y);
    if (absorption_prob(dev, g) > 0.0 && conditional_absorbing_payoff(dev, i, g) > ri[i] + 1e-9)
      throw WitnessInvalid("player " + std::to_string(i + 1) + " has a better absorbing action than the witness");
  }
  MainPlay mp;
  mp.tag = ConstructionTag::Case3Soft;
  mp.player = i;
  mp.action = w.action;
  mp.x_hat = make_profile(i, x0.of(i).mix(MixedAction::pure(g.num_actions(i), w.action), delta), y);
  mp.reference = y;
  mp.gain_factor = 1.0;
  mp.eta = std::min(epsilon / (4.0 * g.payoff_bound), 0.5);
  return assemble_tested(mp, g, v, epsilon, delta, pun, opt);
}

EquilibriumProfile build_example_fixture(const GameSpec& g, const double v[2], double epsilon, double delta,
                                         const Punishers& pun, const BuildOptions& opt) {
  if (g.rows() != 2 || g.cols() != 2) throw InvalidArgument("the example fixture is a 2x2 game");
  if (g.p(0, 0) != 0.0 || g.p(0, 1) != 0.0 || g.p(1, 0) != 1.0 || g.p(1, 1) != 1.0)
    throw InvalidArgument("the example fixture needs a nonabsorbing first row and an absorbing second row");
  if (!(v[0] <= 1.0 && v[0] + v[1] <= 1.0))
    throw InvalidArgument("the example construction needs v1 <= 1 and v1 + v2 <= 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("delta must lie in (0,1]");
  const double alpha = std::max(0.0, v[1]);
  Vector w2(2);
  w2 << 1.0 - alpha, alpha;
  MainPlay mp;
  mp.tag = ConstructionTag::ExampleFixture;
  mp.player = 0;
  mp.action = 1;
  mp.x_hat = MixedProfile{MixedAction::pure(2, 0).mix(MixedAction::pure(2, 1), delta), MixedAction(w2)};
  mp.reference = mp.x_hat.x2;
  mp.gain_factor = 2.0;
  mp.eta = std::min(epsilon / (2.0 * g.payoff_bound), 0.5);
  return assemble_tested(mp, g, v, epsilon, delta, pun, opt);
}

std::vector<Check> check_ledger(const EquilibriumProfile& prof) {
  const ParameterLedger& L = prof.ledger;
  std::vector<Check> out;
  for (int i = 0; i < 2; ++i)
    out.push_back(ledger_check("(1-eta) r*_" + std::to_string(i + 1) + " + eta M >= v - 3eps/2",
                               (1.0 - L.eta) * L.r_star[i] + L.eta * L.bound, L.v[i] - 1.5 * L.epsilon));
  out.push_back(ledger_check("1-(1-p)^N >= 1-eta", 1.0 - std::pow(1.0 - L.p_main, static_cast<double>(L.N)),
                             1.0 - L.eta));
  out.push_back(ledger_check("eps >= 2 eta M", L.epsilon, 2.0 * L.eta * L.bound));
  if (L.B > 0) {
    out.push_back(ledger_check("eps/2 >= 1-(1-p)^B", L.epsilon / 2.0, L.block_absorption));
    out.push_back(ledger_check("1 > kappa", 1.0, L.kappa + 1e-15));
    out.push_back(ledger_check("N = K B", static_cast<double>(L.K * L.B), static_cast<double>(L.N)));
  }
  return out;
}

BuildResult build_and_certify(const PipelineResult& pr, const GameSpec& g, double epsilon, const BuildOptions& opt) {
  const CaseReport& rep = pr.report;
  if (rep.tag == CaseTag::Case3Hard)
    throw InvalidArgument("no construction for the difficult case");
  BuildResult out;
  out.punishers = certified_punishers(g, pr.minmax, epsilon, opt.verify);
  const double v[2] = {pr.minmax.v(0), pr.minmax.v(1)};
  if (rep.tag == CaseTag::Case1) {
    out.profile = build_case1(rep, g, v, epsilon, out.punishers);
    if (!opt.certify) return out;
    out.certificate = certify_epsilon_equilibrium(out.profile, g, opt.families, opt.verify);
    return out;
  }
  int certifications = 0;
  bool have = false;
  double delta = epsilon / 2.0;
  for (int h = 0; h <= opt.max_halvings && certifications < opt.max_certifications; ++h, delta /= 2.0) {
    out.deltas_tried.push_back(delta);
    EquilibriumProfile prof;
    try {
      prof = rep.tag == CaseTag::Case2
                 ? build_case2(rep, g, v, epsilon, delta, out.punishers, opt)
                 : build_case3_soft(*rep.witness, g, v, epsilon, delta, rep.x0, out.punishers, opt);
    } catch (const DeltaTooLarge&) {
      continue;
    }
    out.profile = prof;
    if (!opt.certify) return out;
    out.certificate = certify_epsilon_equilibrium(prof, g, opt.families, opt.verify);
    have = true;
    ++certifications;
    if (out.certificate.certified) return out;
  }
  if (!have) throw DeltaTooLarge("no delta down to eps/2^" + std::to_string(opt.max_halvings) + " satisfies the ledger");
  return out;
}

BuildResult build_example_and_certify(const GameSpec& g, const MinmaxReport& mm, double epsilon,
                                      const BuildOptions& opt) {
  BuildResult out;
  out.punishers = certified_punishers(g, mm, epsilon, opt.verify);
  const double v[2] = {mm.v(0), mm.v(1)};
  int certifications = 0;
  bool have = false;
  double delta = epsilon / 2.0;
  for (int h = 0; h <= opt.max_halvings && certifications < opt.max_certifications; ++h, delta /= 2.0) {
    out.deltas_tried.push_back(delta);
    EquilibriumProfile prof;
    try {
      prof = build_example_fixture(g, v, epsilon, delta, out.punishers, opt);
    } catch (const DeltaTooLarge&) {
      continue;
    }
    out.profile = prof;
    if (!opt.certify) return out;
    out.certificate = certify_epsilon_equilibrium(prof, g, opt.families, opt.verify);
    have = true;
    ++certifications;
    if (out.certificate.certified) return out;
  }
  if (!have) throw DeltaTooLarge("no delta satisfies the ledger");
  return out;
}

}  // namespace abg
