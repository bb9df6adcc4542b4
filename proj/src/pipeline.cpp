#include "abg/pipeline.hpp"

#include "abg/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace abg {

AuxiliaryGame build_auxiliary(const GameSpec& g, const double v[2], double epsilon) {
  for (int i = 0; i < 2; ++i)
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) throw InvalidArgument("minmax values must lie in [0,1]");
  if (!(epsilon > 0.0 && epsilon <= std::min(v[0], v[1]) + 1.0))
    throw InvalidArgument("epsilon must lie in (0, min(v) + 1]");
  AuxiliaryGame aux;
  aux.base = &g;
  aux.epsilon = epsilon;
  aux.sg.p = g.absorb_prob;
  for (int i = 0; i < 2; ++i) {
    aux.v[i] = v[i];
    aux.stage_payoff[i] = v[i] - epsilon;
    aux.sg.r[i] = g.absorb_payoff[i];
    aux.sg.z[i] = Matrix::Constant(g.rows(), g.cols(), aux.stage_payoff[i]);
  }
  return aux;
}

AuxiliaryMinmax auxiliary_minmax(const AuxiliaryGame& aux, const std::vector<double>& schedule_in) {
  const auto schedule = schedule_in.empty() ? default_lambda_schedule() : schedule_in;
  AuxiliaryMinmax out;
  const bool all_absorbing = (aux.sg.p.array() == 1.0).all();
  for (int i = 0; i < 2; ++i) {
    const ZeroSumStageGame zs = zero_sum_view(aux.sg, i);
    if (all_absorbing) {
      out.v_inf[i] = zero_sum_value(zs.r).value;
    } else {
      const auto vd = vanishing_discount_value(zs, schedule);
      // Same one-shot map as the base game: only the nonabsorbing payoffs differ.
      out.v_inf[i] = aux.base ? project_onto_fixed_points(*aux.base, i, vd.value) : vd.value;
      out.v_inf[i] = std::min(out.v_inf[i], stationary_punishment(aux.sg, i).value);
      out.trace[i] = vd.trace;
    }
    const double lo = aux.v[i] - aux.epsilon - kSandwichTol;
    const double hi = aux.v[i] + kSandwichTol;
    if (out.v_inf[i] < lo || out.v_inf[i] > hi)
      throw SandwichViolation("player " + std::to_string(i + 1) + ": auxiliary minmax " +
                              std::to_string(out.v_inf[i]) + " outside [v-eps, v]");
  }
  return out;
}

double discounted_deviation_gain(const StageGame& sg, const MixedProfile& x, double lambda) {
  double gain = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 2; ++i) {
    const double base = discounted_stationary_payoff(sg, x, i, lambda);
    const int n = i == 0 ? sg.rows() : sg.cols();
    for (int a = 0; a < n; ++a) {
      const MixedProfile dev = make_profile(i, MixedAction::pure(n, a), x.of(opponent(i)));
      gain = std::max(gain, discounted_stationary_payoff(sg, dev, i, lambda) - base);
    }
  }
  return gain;
}

namespace {

struct Candidate {
  double value;
  Vector mix;  // over the opponent support
};

// Opponent mixes on `cols` that leave the owner indifferent over `rows` in
// the discounted game: sum_b y(b) [alpha(a,b) - V beta(a,b)] = 0.
std::vector<Candidate> indifference_candidates(const Matrix& alpha, const Matrix& beta,
                                               const std::vector<int>& rows,
                                               const std::vector<int>& cols) {
  const int k = static_cast<int>(rows.size());
  Matrix A(k, k), B(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      A(i, j) = alpha(rows[i], cols[j]);
      B(i, j) = beta(rows[i], cols[j]);
    }
  std::vector<Candidate> out;
  if (k == 1) {
    out.push_back({A(0, 0) / B(0, 0), Vector::Ones(1)});
    return out;
  }
  Eigen::GeneralizedEigenSolver<Matrix> ges(A, B, false);
  if (ges.info() != Eigen::Success) return out;
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  for (int e = 0; e < k; ++e) {
    const std::complex<double> al = ges.alphas()[e];
    const double be = ges.betas()[e];
    if (std::abs(be) < 1e-14 * scale) continue;
    if (std::abs(al.imag()) > 1e-9 * std::max(1.0, std::abs(be) * scale)) continue;
    const double val = al.real() / be;
    if (!std::isfinite(val)) continue;
    const Matrix m = A - val * B;
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const Vector sv = svd.singularValues();
    if (sv[k - 1] > 1e-7 * std::max(1.0, sv[0])) continue;
    if (k >= 2 && sv[k - 2] <= 1e-10 * std::max(1.0, sv[0])) continue;  // singular pencil
    Vector y = svd.matrixV().col(k - 1);
    const double s = y.sum();
    if (std::abs(s) < 1e-14) continue;
    y /= s;
    if (y.minCoeff() < -1e-10) continue;
    y = y.cwiseMax(0.0);
    y /= y.sum();
    out.push_back({val, y});
  }
  return out;
}

Vector embed(const Vector& part, const std::vector<int>& idx, int n) {
  Vector w = Vector::Zero(n);
  for (size_t i = 0; i < idx.size(); ++i) w[idx[i]] = part[static_cast<int>(i)];
  return w / w.sum();
}

}  // namespace

DiscountedEquilibrium discounted_equilibrium(const StageGame& sg, double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw InvalidArgument("lambda must lie in (0,1)");
  const int m = sg.rows(), n = sg.cols();
  if (m > kBimatrixCap || n > kBimatrixCap)
    throw SizeCapExceeded("discounted equilibrium limited to 8 actions per player");
  const Matrix ones = Matrix::Ones(m, n);
  const Matrix q = ones - sg.p;
  const Matrix beta = sg.p + lambda * q;
  Matrix alpha[2];
  for (int i = 0; i < 2; ++i)
    alpha[i] = sg.p.cwiseProduct(sg.r[i]) + lambda * q.cwiseProduct(sg.z[i]);
  const Matrix alpha2t = alpha[1].transpose();
  const Matrix beta_t = beta.transpose();

  for (const auto& s1 : ordered_supports(m)) {
    for (const auto& s2 : ordered_supports(n)) {
      if (s1.size() != s2.size()) continue;
      const auto ys = indifference_candidates(alpha[0], beta, s1, s2);
      if (ys.empty()) continue;
      const auto xs = indifference_candidates(alpha2t, beta_t, s2, s1);
      for (const auto& cy : ys) {
        for (const auto& cx : xs) {
          MixedProfile x{MixedAction(embed(cx.mix, s1, m)), MixedAction(embed(cy.mix, s2, n))};
          const double gain = discounted_deviation_gain(sg, x, lambda);
          if (gain > 1e-9) continue;
          DiscountedEquilibrium eq;
          eq.x = x;
          for (int i = 0; i < 2; ++i) eq.u[i] = discounted_stationary_payoff(sg, x, i, lambda);
          eq.residual = std::max(0.0, gain);
          return eq;
        }
      }
    }
  }
  throw NoEquilibriumFound("no stationary discounted equilibrium found at lambda=" +
                           std::to_string(lambda));
}

DiscountedTrace discounted_trace(const AuxiliaryGame& aux, const std::vector<double>& schedule_in) {
  const auto schedule = schedule_in.empty() ? default_lambda_schedule() : schedule_in;
  DiscountedTrace tr;
  for (double lam : schedule) {
    const auto eq = discounted_equilibrium(aux.sg, lam);
    TraceEntry e;
    e.lambda = lam;
    e.x = eq.x;
    e.u[0] = eq.u[0];
    e.u[1] = eq.u[1];
    e.residual = eq.residual;
    tr.entries.push_back(e);
  }
  return tr;
}

namespace {

double sup_distance(const MixedProfile& a, const MixedProfile& b) {
  return std::max((a.x1.weights() - b.x1.weights()).cwiseAbs().maxCoeff(),
                  (a.x2.weights() - b.x2.weights()).cwiseAbs().maxCoeff());
}

}  // namespace

LimitProfile limit_profile(const DiscountedTrace& trace, const GameSpec& g, double radius) {
  const auto& e = trace.entries;
  const int n = static_cast<int>(e.size());
  if (n < 5) throw InvalidArgument("limit extraction needs at least 5 trace entries");
  const MixedProfile& last = e[n - 1].x;
  if (sup_distance(e[n - 2].x, last) > radius || sup_distance(e[n - 3].x, last) > radius ||
      sup_distance(e[n - 2].x, e[n - 3].x) > radius)
    throw NoStableCluster("the three smallest-lambda profiles do not cluster within radius " +
                          std::to_string(radius));
  LimitProfile lim;
  lim.cluster_radius = radius;
  for (int k = n - 1; k >= 0 && sup_distance(e[k].x, last) <= radius; --k) lim.selected.push_back(k);
  std::reverse(lim.selected.begin(), lim.selected.end());

  // The tail converges at rate O(lambda), so the two smallest-lambda entries
  // are extrapolated (halving schedule) instead of averaging the cluster,
  // whose mean would carry an error of order radius.
  Vector w[2];
  const double ratio = e[n - 2].lambda / e[n - 1].lambda;
  for (int pl = 0; pl < 2; ++pl) {
    const Vector& now = last.of(pl).weights();
    const Vector& prev = e[n - 2].x.of(pl).weights();
    const Vector& before = e[n - 3].x.of(pl).weights();
    w[pl] = (ratio * now - prev) / (ratio - 1.0);
    for (int a = 0; a < w[pl].size(); ++a) {
      const bool vanishing = now[a] <= 1e-12 || w[pl][a] <= 1e-12 ||
                             (now[a] <= radius && now[a] <= 0.75 * before[a]);
      if (vanishing) w[pl][a] = 0.0;
    }
    if (w[pl].sum() <= 0.0) w[pl] = now;
    w[pl] /= w[pl].sum();
  }
  lim.x0 = MixedProfile{MixedAction(w[0]), MixedAction(w[1])};
  lim.p0 = absorption_prob(lim.x0, g);
  lim.is_absorbing = lim.p0 > 0.0;

  // Remaining entries grouped greedily, reported as alternatives.
  std::vector<bool> used(n, false);
  for (int k : lim.selected) used[k] = true;
  for (int k = n - 1; k >= 0; --k) {
    if (used[k]) continue;
    used[k] = true;
    for (int j = k - 1; j >= 0; --j)
      if (!used[j] && sup_distance(e[j].x, e[k].x) <= radius) used[j] = true;
    lim.alternatives.push_back(e[k].x);
  }
  return lim;
}

const char* case_name(CaseTag t) {
  switch (t) {
    case CaseTag::Case1:
      return "Case1";
    case CaseTag::Case2:
      return "Case2";
    case CaseTag::Case3Soft:
      return "Case3Soft";
    case CaseTag::Case3Hard:
      return "Case3Hard";
  }
  return "?";
}

namespace {

MixedProfile pure_against(const GameSpec& g, int player, int action, const MixedAction& other) {
  return make_profile(player, MixedAction::pure(g.num_actions(player), action), other);
}

Check make_check(std::string name, double lhs, double rhs, double tol, bool strict = false) {
  Check c{std::move(name), lhs, rhs, strict, false};
  c.pass = strict ? lhs > rhs + tol : lhs >= rhs - tol;
  return c;
}

std::string label(const GameSpec& g, int player, int action) {
  return "player " + std::to_string(player + 1) + " action " + g.actions(player)[action];
}

}  // namespace

DifficultConditions difficult_conditions(const GameSpec& g, const double v[2],
                                         const SafePolytope& y1, const SafePolytope& y2,
                                         double tol) {
  DifficultConditions dc;
  // Condition 1: bilinear p, so the max over Y1 x Y2 sits at a vertex pair.
  dc.max_pair_absorption = 0.0;
  bool have_pair = false;
  for (const auto& a : y1.vertices)
    for (const auto& b : y2.vertices) {
      const double pv = a.dot(g.absorb_prob * b);
      if (!have_pair || pv > dc.max_pair_absorption) {
        dc.max_pair_absorption = pv;
        dc.max_pair = MixedProfile{MixedAction(a), MixedAction(b)};
        have_pair = true;
      }
    }
  dc.cond[0] = dc.max_pair_absorption <= tol;

  // Conditions 2 and 3: the responder `resp` looks for a good absorbing
  // reply to some safe mixed action of the other player.
  struct Found {
    Vector y;
    int action;
  };
  std::optional<Found> found[2];
  for (int resp = 1; resp >= 0; --resp) {
    const int safe_owner = opponent(resp);
    const SafePolytope& Y = safe_owner == 0 ? y1 : y2;
    double best = 0.0;
    for (int a = 0; a < g.num_actions(resp); ++a) {
      Vector pcol(g.num_actions(safe_owner)), good(g.num_actions(safe_owner));
      for (int s = 0; s < g.num_actions(safe_owner); ++s) {
        const int a1 = resp == 0 ? a : s;
        const int a2 = resp == 0 ? s : a;
        pcol[s] = g.p(a1, a2);
        good[s] = g.p(a1, a2) * (g.r(resp, a1, a2) - v[resp]);
      }
      const auto opt = maximize_linear(Y.poly.with_constraint(good, 0.0), pcol);
      if (!opt) continue;
      if (opt->value > best) best = opt->value;
      if (opt->value >= tol && !found[resp]) found[resp] = Found{opt->argmax, a};
    }
    dc.max_good_response_mass[resp == 1 ? 0 : 1] = best;
  }
  dc.cond[1] = !found[1];  // player 2 has no good reply to Y1
  dc.cond[2] = !found[0];  // player 1 has no good reply to Y2
  dc.holds = dc.cond[0] && dc.cond[1] && dc.cond[2];
  if (dc.holds) return dc;

  // Lift the first violated condition to (i, a_i, y_-i) with (a) and (b),
  // then pick the best such a_i for player i so that (c) holds.
  int player = 0;
  Vector yopp;
  if (!dc.cond[0]) {
    dc.violated = 1;
    player = 0;
    yopp = dc.max_pair.x2.weights();
  } else if (!dc.cond[1]) {
    dc.violated = 2;
    player = 1;
    yopp = found[1]->y;
  } else {
    dc.violated = 3;
    player = 0;
    yopp = found[0]->y;
  }
  const MixedAction y_opp(yopp);
  Witness w;
  w.player = player;
  w.y_opp = y_opp;
  double best_ri = -std::numeric_limits<double>::infinity();
  int best_a = -1;
  for (int a = 0; a < g.num_actions(player); ++a) {
    const MixedProfile pr = pure_against(g, player, a, y_opp);
    if (absorption_prob(pr, g) <= tol) continue;
    const double ri = conditional_absorbing_payoff(pr, player, g);
    const double ro = conditional_absorbing_payoff(pr, opponent(player), g);
    if (ri < v[player] - 1e-9 || ro < v[opponent(player)] - 1e-9) continue;
    if (ri > best_ri + 1e-15) {
      best_ri = ri;
      best_a = a;
    }
  }
  if (best_a >= 0) {
    w.action = best_a;
    const MixedProfile pr = pure_against(g, player, best_a, y_opp);
    w.r_star[0] = conditional_absorbing_payoff(pr, 0, g);
    w.r_star[1] = conditional_absorbing_payoff(pr, 1, g);
    dc.witness = w;
  }
  return dc;
}

CaseReport classify(const GameSpec& g, const AuxiliaryGame& aux, const LimitProfile& lim,
                    const double v[2], double epsilon, double tol, const double* v_inf) {
  CaseReport rep;
  rep.x0 = lim.x0;
  rep.p0 = absorption_prob(lim.x0, g);
  rep.epsilon = epsilon;
  rep.tol = tol;
  for (int i = 0; i < 2; ++i) {
    rep.v[i] = v[i];
    rep.v_inf[i] = v_inf ? v_inf[i] : std::numeric_limits<double>::quiet_NaN();
  }
  (void)aux;
  const MixedProfile& x0 = lim.x0;

  // Case 1.
  {
    std::vector<Check> cs;
    cs.push_back(make_check("1(a) p(x0) > 0", rep.p0, 0.0, tol, true));
    bool ok = cs.back().pass;
    double rs[2] = {0.0, 0.0};
    if (ok) {
      for (int i = 0; i < 2; ++i) {
        rs[i] = conditional_absorbing_payoff(x0, i, g);
        cs.push_back(make_check("1(b) r*_" + std::to_string(i + 1) + "(x0) >= v - eps", rs[i],
                                v[i] - epsilon, tol));
        if (v_inf)
          rep.warnings.push_back("1(b) margin against v_inf for player " + std::to_string(i + 1) +
                                 ": " + std::to_string(rs[i] - v_inf[i]));
        ok = ok && cs.back().pass;
      }
      for (int i = 0; i < 2; ++i)
        for (int a = 0; a < g.num_actions(i); ++a) {
          const MixedProfile dev = pure_against(g, i, a, x0.of(opponent(i)));
          if (absorption_prob(dev, g) <= tol) continue;
          cs.push_back(make_check("1(c) no absorbing gain, " + label(g, i, a), rs[i],
                                  conditional_absorbing_payoff(dev, i, g), tol));
          ok = ok && cs.back().pass;
        }
    }
    rep.holds[0] = ok;
    if (ok) {
      rep.tag = CaseTag::Case1;
      rep.r_star[0] = rs[0];
      rep.r_star[1] = rs[1];
      rep.checks = cs;
    } else if (rep.p0 > tol) {
      rep.checks = cs;
    }
  }

  // Case 2.
  if (!rep.holds[0] && rep.p0 <= tol) {
    for (int i = 0; i < 2 && !rep.holds[1]; ++i) {
      for (int ah = 0; ah < g.num_actions(i) && !rep.holds[1]; ++ah) {
        std::vector<Check> cs;
        cs.push_back(make_check("2(a) p(x0) = 0", tol, rep.p0, 0.0));
        const MixedProfile hat = pure_against(g, i, ah, x0.of(opponent(i)));
        cs.push_back(make_check("2(b) p(a_hat, x0_-i) > 0", absorption_prob(hat, g), 0.0, tol, true));
        if (!cs.back().pass) continue;
        double rh[2];
        bool ok = true;
        for (int j = 0; j < 2; ++j) {
          rh[j] = conditional_absorbing_payoff(hat, j, g);
          cs.push_back(make_check("2(c) r*_" + std::to_string(j + 1) + "(a_hat, x0_-i) >= v - eps",
                                  rh[j], v[j] - epsilon, tol));
          ok = ok && cs.back().pass;
        }
        if (!ok) continue;
        for (int j = 0; j < 2; ++j)
          for (int a = 0; a < g.num_actions(j); ++a) {
            const MixedProfile dev = pure_against(g, j, a, x0.of(opponent(j)));
            if (absorption_prob(dev, g) <= tol) continue;
            cs.push_back(make_check("2(d) dominance, " + label(g, j, a), rh[j],
                                    conditional_absorbing_payoff(dev, j, g), tol));
            ok = ok && cs.back().pass;
          }
        if (!ok) continue;
        rep.holds[1] = true;
        rep.tag = CaseTag::Case2;
        rep.player = i;
        rep.action = ah;
        rep.r_star[0] = rh[0];
        rep.r_star[1] = rh[1];
        rep.checks = cs;
        if (v_inf)
          for (int j = 0; j < 2; ++j)
            rep.warnings.push_back("2(c) margin against v_inf for player " + std::to_string(j + 1) +
                                   ": " + std::to_string(rh[j] - v_inf[j]));
      }
    }
  }

  // Case 3.
  if (!rep.holds[0] && !rep.holds[1] && rep.p0 <= tol) {
    std::vector<Check> cs;
    cs.push_back(make_check("3(a) p(x0) = 0", tol, rep.p0, 0.0));
    bool ok = true;
    for (int i = 0; i < 2; ++i)
      for (int a = 0; a < g.num_actions(i); ++a) {
        const MixedProfile dev = pure_against(g, i, a, x0.of(opponent(i)));
        if (absorption_prob(dev, g) <= tol) continue;
        cs.push_back(make_check("3(b) no absorbing gain, " + label(g, i, a), v[i] - epsilon,
                                conditional_absorbing_payoff(dev, i, g), tol));
        ok = ok && cs.back().pass;
      }
    rep.holds[2] = ok;
    if (ok) {
      rep.checks = cs;
      const auto Y1 = safe_polytope(g, 0, v[0]);
      const auto Y2 = safe_polytope(g, 1, v[1]);
      rep.difficult = difficult_conditions(g, v, Y1, Y2, tol);
      if (rep.difficult->holds) {
        rep.tag = CaseTag::Case3Hard;
      } else {
        if (!rep.difficult->witness)
          throw NoCaseMatched("difficult-case condition failed but no witness could be lifted");
        rep.tag = CaseTag::Case3Soft;
        rep.witness = rep.difficult->witness;
        rep.player = rep.witness->player;
        rep.action = rep.witness->action;
        rep.r_star[0] = rep.witness->r_star[0];
        rep.r_star[1] = rep.witness->r_star[1];
      }
    }
  }

  if (!rep.holds[0] && !rep.holds[1] && !rep.holds[2])
    throw NoCaseMatched("no case of the trichotomy holds within tolerance");

  for (const auto& c : rep.checks)
    if (std::abs(c.slack()) <= 10.0 * tol && c.name.find("p(x0) = 0") == std::string::npos)
      rep.warnings.push_back("near-boundary: " + c.name + " slack " + std::to_string(c.slack()));
  return rep;
}

PipelineResult run_pipeline(const GameSpec& g, double epsilon, double tol,
                            const std::vector<double>& schedule) {
  PipelineResult out;
  out.minmax = minmax_values(g, schedule);
  const double v[2] = {out.minmax.v(0), out.minmax.v(1)};
  const AuxiliaryGame aux = build_auxiliary(g, v, epsilon);
  out.aux_minmax = auxiliary_minmax(aux, schedule);
  out.trace = discounted_trace(aux, schedule);
  out.limit = limit_profile(out.trace, g);
  out.report = classify(g, aux, out.limit, v, epsilon, tol, out.aux_minmax.v_inf);
  return out;
}

}  // namespace abg
