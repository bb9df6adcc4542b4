#include "abg/game.hpp"

#include "abg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace abg {

namespace {

std::string join_violations(const std::vector<std::string>& v) {
  std::ostringstream os;
  os << "invalid game:";
  for (const auto& s : v) os << "\n  - " << s;
  return os.str();
}

bool in_unit(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

const char* payoff_kind(const PayoffSpec& spec) {
  return std::visit(overloaded{
                        [](const ConstantPayoff&) { return "constant"; },
                        [](const LimsupAverage&) { return "limsup-average"; },
                        [](const EvenStageLimsupAverage&) { return "even-stage-limsup-average"; },
                        [](const LimsupStage&) { return "limsup-stage"; },
                        [](const Buchi&) { return "buchi"; },
                        [](const CoBuchi&) { return "co-buchi"; },
                    },
                    spec.rule);
}

std::pair<double, double> payoff_range(const PayoffSpec& spec) {
  return std::visit(overloaded{
                        [](const ConstantPayoff& c) { return std::pair{c.value, c.value}; },
                        [](const Buchi& b) {
                          return std::pair{std::min(b.hit_payoff, b.miss_payoff),
                                           std::max(b.hit_payoff, b.miss_payoff)};
                        },
                        [](const CoBuchi& b) {
                          return std::pair{std::min(b.finite_payoff, b.infinite_payoff),
                                           std::max(b.finite_payoff, b.infinite_payoff)};
                        },
                        [](const auto& t) { return std::pair{t.z.minCoeff(), t.z.maxCoeff()}; },
                    },
                    spec.rule);
}

GameSpec validate_game(GameSpec g) {
  std::vector<std::string> bad;
  for (int pl = 0; pl < 2; ++pl) {
    const auto& acts = g.actions(pl);
    if (acts.empty()) bad.push_back("player " + std::to_string(pl + 1) + " has no actions");
    std::set<std::string> seen;
    for (const auto& a : acts) {
      if (!seen.insert(a).second)
        bad.push_back("player " + std::to_string(pl + 1) + " action '" + a + "' is duplicated");
    }
  }
  if (!bad.empty()) throw ValidationError(bad);

  const int m = g.rows(), n = g.cols();
  if (g.absorb_prob.rows() != m || g.absorb_prob.cols() != n)
    throw ValidationError({"absorb_prob has wrong shape"});
  for (int pl = 0; pl < 2; ++pl) {
    if (g.absorb_payoff[pl].rows() != m || g.absorb_payoff[pl].cols() != n ||
        g.has_absorb_payoff[pl].rows() != m || g.has_absorb_payoff[pl].cols() != n)
      throw ValidationError({"absorb_payoff" + std::to_string(pl + 1) + " has wrong shape"});
  }

  auto cell = [&](int a, int b) { return "(" + g.actions1[a] + "," + g.actions2[b] + ")"; };
  double largest = 0.0;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < n; ++b) {
      const double p = g.absorb_prob(a, b);
      if (!in_unit(p)) bad.push_back("probability out of range at " + cell(a, b));
      for (int pl = 0; pl < 2; ++pl) {
        if (g.has_absorb_payoff[pl](a, b)) {
          const double r = g.absorb_payoff[pl](a, b);
          if (!in_unit(r))
            bad.push_back("absorb_payoff" + std::to_string(pl + 1) + " out of [0,1] at " +
                          cell(a, b));
          largest = std::max(largest, std::abs(r));
        } else {
          g.absorb_payoff[pl](a, b) = 0.0;
          if (p > 0.0)
            bad.push_back("missing absorb_payoff" + std::to_string(pl + 1) + " at " + cell(a, b) +
                          " where absorb_prob > 0");
        }
      }
    }
  }

  for (int pl = 0; pl < 2; ++pl) {
    const std::string who = "nonabs_payoff" + std::to_string(pl + 1);
    const PayoffSpec& s = g.payoff[pl];
    std::visit(overloaded{
                   [&](const ConstantPayoff& c) {
                     if (!in_unit(c.value)) bad.push_back(who + " constant out of [0,1]");
                   },
                   [&]<class T>(const T& t) requires requires(const T& u) { u.z; } {
                     if (t.z.rows() != m || t.z.cols() != n) {
                       bad.push_back(who + " table has wrong shape");
                       return;
                     }
                     for (int a = 0; a < m; ++a)
                       for (int b = 0; b < n; ++b)
                         if (!in_unit(t.z(a, b))) bad.push_back(who + " out of [0,1] at " + cell(a, b));
                   },
                   [&]<class T>(const T& t) requires requires(const T& u) { u.target; } {
                     if (t.target.empty()) bad.push_back(who + " target set is empty");
                     for (const auto& ja : t.target)
                       if (ja.a1 < 0 || ja.a1 >= m || ja.a2 < 0 || ja.a2 >= n)
                         bad.push_back(who + " target refers to an unknown action pair");
                   },
               },
               s.rule);
    if (std::holds_alternative<Buchi>(s.rule)) {
      const auto& b = std::get<Buchi>(s.rule);
      if (!in_unit(b.hit_payoff) || !in_unit(b.miss_payoff))
        bad.push_back(who + " payoffs out of [0,1]");
    }
    if (std::holds_alternative<CoBuchi>(s.rule)) {
      const auto& b = std::get<CoBuchi>(s.rule);
      if (!in_unit(b.finite_payoff) || !in_unit(b.infinite_payoff))
        bad.push_back(who + " payoffs out of [0,1]");
    }
    if (s.declared_minmax && !in_unit(*s.declared_minmax))
      bad.push_back(who + " declared_minmax out of [0,1]");
    if (bad.empty()) {
      auto [lo, hi] = payoff_range(s);
      largest = std::max({largest, std::abs(lo), std::abs(hi)});
    }
  }

  if (!std::isfinite(g.payoff_bound) || g.payoff_bound < largest)
    bad.push_back("payoff_bound too small: " + std::to_string(g.payoff_bound) + " < " +
                  std::to_string(largest));
  if (!bad.empty()) throw ValidationError(bad);
  return g;
}

MixedAction::MixedAction(Vector weights) : w_(std::move(weights)) {
  if (w_.size() == 0) throw InvalidArgument("mixed action over an empty action set");
  for (int k = 0; k < w_.size(); ++k) {
    if (!std::isfinite(w_[k]) || w_[k] < -kSumTolerance)
      throw InvalidArgument("mixed action has a negative weight");
    if (w_[k] < kSupportThreshold) w_[k] = 0.0;
  }
  if (std::abs(w_.sum() - 1.0) > kSumTolerance)
    throw InvalidArgument("mixed action weights do not sum to 1");
}

MixedAction MixedAction::pure(int n, int k) {
  Vector w = Vector::Zero(n);
  w[k] = 1.0;
  return MixedAction(w);
}

MixedAction MixedAction::uniform(int n) { return MixedAction(Vector::Constant(n, 1.0 / n)); }

std::vector<int> MixedAction::support() const {
  std::vector<int> s;
  for (int k = 0; k < size(); ++k)
    if (in_support(k)) s.push_back(k);
  return s;
}

MixedAction MixedAction::mix(const MixedAction& other, double t) const {
  Vector w = (1.0 - t) * w_ + t * other.w_;
  w /= w.sum();
  return MixedAction(w);
}

MixedProfile make_profile(int player, const MixedAction& own, const MixedAction& other) {
  return player == 0 ? MixedProfile{own, other} : MixedProfile{other, own};
}

double absorption_prob(const MixedProfile& x, const GameSpec& g) {
  return x.x1.weights().dot(g.absorb_prob * x.x2.weights());
}

double conditional_absorbing_payoff(const MixedProfile& x, int player, const GameSpec& g) {
  const Matrix pr = g.absorb_prob.cwiseProduct(g.absorb_payoff[player]);
  const double den = absorption_prob(x, g);
  if (den <= 0.0) throw NonAbsorbingProfile("profile is nonabsorbing: p(x) = 0");
  const double num = x.x1.weights().dot(pr * x.x2.weights());
  return num / den;
}

namespace {

bool single_cell(const MixedProfile& x) { return x.x1.is_pure() && x.x2.is_pure(); }

}  // namespace

double iid_nonabsorbing_value(const MixedProfile& x, int player, const GameSpec& g) {
  const PayoffSpec& spec = g.payoff[player];
  const auto& w1 = x.x1.weights();
  const auto& w2 = x.x2.weights();
  return std::visit(
      overloaded{
          [](const ConstantPayoff& c) { return c.value; },
          [&](const LimsupAverage& t) { return w1.dot(t.z * w2); },
          [&](const EvenStageLimsupAverage& t) { return w1.dot(t.z * w2); },
          [&](const LimsupStage& t) {
            if (!single_cell(x))
              throw UnsupportedExactEvaluation("limsup-stage payoff under randomized play");
            return t.z(x.x1.support()[0], x.x2.support()[0]);
          },
          [&](const Buchi& b) {
            if (!single_cell(x)) throw UnsupportedExactEvaluation("buchi payoff under randomized play");
            JointAction c{x.x1.support()[0], x.x2.support()[0]};
            bool hit = std::find(b.target.begin(), b.target.end(), c) != b.target.end();
            return hit ? b.hit_payoff : b.miss_payoff;
          },
          [&](const CoBuchi& b) {
            if (!single_cell(x))
              throw UnsupportedExactEvaluation("co-buchi payoff under randomized play");
            JointAction c{x.x1.support()[0], x.x2.support()[0]};
            bool hit = std::find(b.target.begin(), b.target.end(), c) != b.target.end();
            return hit ? b.infinite_payoff : b.finite_payoff;
          },
      },
      spec.rule);
}

double stationary_payoff(const MixedProfile& x, int player, const GameSpec& g) {
  if (absorption_prob(x, g) > 0.0) return conditional_absorbing_payoff(x, player, g);
  return iid_nonabsorbing_value(x, player, g);
}

long window_start(long horizon, double window) {
  const long len = static_cast<long>(std::ceil(window * static_cast<double>(horizon) - 1e-9));
  return horizon - std::max(len, 1L) + 1;
}

TailEstimator::TailEstimator(const PayoffSpec& spec, long horizon, double window)
    : spec_(&spec), start_(abg::window_start(horizon, window)) {
  if (!(window > 0.0 && window <= 1.0)) throw InvalidArgument("window must lie in (0,1]");
}

void TailEstimator::feed(long stage, const JointAction& a) {
  if (stage < start_) return;
  std::visit(overloaded{
                 [&](const ConstantPayoff&) { ++count_; },
                 [&](const LimsupAverage& t) {
                   sum_ += t.z(a.a1, a.a2);
                   ++count_;
                 },
                 [&](const EvenStageLimsupAverage& t) {
                   if (stage % 2 == 0) {
                     sum_ += t.z(a.a1, a.a2);
                     ++count_;
                   }
                 },
                 [&](const LimsupStage& t) {
                   max_ = count_ == 0 ? t.z(a.a1, a.a2) : std::max(max_, t.z(a.a1, a.a2));
                   ++count_;
                 },
                 [&]<class T>(const T& b) requires requires(const T& u) { u.target; } {
                   if (std::find(b.target.begin(), b.target.end(), a) != b.target.end()) hit_ = true;
                   ++count_;
                 },
             },
             spec_->rule);
}

double TailEstimator::value() const {
  if (count_ == 0) throw EmptyWindow("evaluation window contains no qualifying stage");
  return std::visit(overloaded{
                        [](const ConstantPayoff& c) { return c.value; },
                        [&](const LimsupStage&) { return max_; },
                        [&](const Buchi& b) { return hit_ ? b.hit_payoff : b.miss_payoff; },
                        [&](const CoBuchi& b) { return hit_ ? b.infinite_payoff : b.finite_payoff; },
                        [&](const auto&) { return sum_ / static_cast<double>(count_); },
                    },
                    spec_->rule);
}

RunEstimate evaluate_run(const RunPrefix& prefix, const GameSpec& g, int player, double window) {
  if (prefix.stages.empty()) throw InvalidArgument("empty run prefix");
  if (prefix.absorbed_at) {
    const int t = *prefix.absorbed_at;
    if (t < 1 || t != static_cast<int>(prefix.stages.size()))
      throw InvalidArgument("absorbed_at must equal the prefix length");
    const JointAction& a = prefix.stages.back();
    return {g.r(player, a.a1, a.a2), true};
  }
  if (std::holds_alternative<ConstantPayoff>(g.payoff[player].rule))
    return {std::get<ConstantPayoff>(g.payoff[player].rule).value, true};
  const long T = static_cast<long>(prefix.stages.size());
  TailEstimator est(g.payoff[player], T, window);
  for (long t = est.window_start(); t <= T; ++t) est.feed(t, prefix.stages[t - 1]);
  return {est.value(), false};
}

}  // namespace abg
