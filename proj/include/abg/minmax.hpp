#pragma once

#include "abg/discounted.hpp"
#include "abg/polytope.hpp"

#include <optional>
#include <string>
#include <vector>

namespace abg {

enum class MinmaxMethod { VanishingDiscount, Declared, OneShot };
const char* method_name(MinmaxMethod m);

struct PlayerMinmax {
  double value = 0.0;
  MinmaxMethod method = MinmaxMethod::VanishingDiscount;
  std::vector<std::pair<double, double>> discount_trace;
  bool richardson = false;
  bool nonconvergent = false;
  bool projected = false;  // extrapolation moved onto the one-shot fixed-point set
  bool capped = false;     // lowered to the best stationary punishment
  MixedAction punisher;  // opponent's stationary candidate punishment
  MixedAction safe;      // own mixed action y_i of the one-shot game
  double residual = 0.0; // |val(Phi_i(v_i)) - v_i|
  // Best stationary punishment, an upper bound on the minmax value.
  // Empty for declared and one-shot values.
  MixedAction stationary_punisher;
  double stationary_value = 0.0;
};

struct MinmaxReport {
  PlayerMinmax player[2];
  double residual() const { return std::max(player[0].residual, player[1].residual); }
  double v(int i) const { return player[i].value; }
};

inline constexpr double kMinmaxResidualTol = 1e-6;

// `schedule` empty means the default 2^-1..2^-20.
MinmaxReport minmax_values(const GameSpec& g, const std::vector<double>& schedule = {});

// Phi_i(v)(a) = p(a) r_i(a) + (1-p(a)) v, rows = player's actions.
struct OneShotAuxiliary {
  Matrix matrix;
  MatrixGameSolution solution;
  bool lemma_holds = true;   // every absorbing reply leaves r*_i(y_i, .) >= v
  double lemma_slack = 0.0;  // min over absorbing replies of r*_i - v
};

OneShotAuxiliary one_shot_auxiliary(const GameSpec& g, int player, double v);

// val(Phi_i(v)) - v is nonincreasing in v, so its zero set is an interval
// containing the minmax value. Returns the point of that interval closest to v.
double project_onto_fixed_points(const GameSpec& g, int player, double v);

// Undiscounted payoff of `player` holding pure action a forever against the
// opponent's stationary y: r*_i(a, y) when p(a, y) > 0, else z_i(a, y).
double stationary_reply_value(const StageGame& sg, int player, int a, const Vector& y);
double stationary_best_reply(const StageGame& sg, int player, const Vector& y);

struct StationaryPunishment {
  double value = 0.0;
  MixedAction punisher;
};

// min over the opponent's stationary mixed actions of the best reply value.
// For each support of y the condition "every reply pays <= t" is linear in
// y, so t is bisected with a feasibility check by vertex enumeration.
StationaryPunishment stationary_punishment(const StageGame& sg, int player);

struct SafePolytope {
  int player = 0;
  double target_value = 0.0;
  SimplexPolytope poly;  // rows indexed by opponent actions
  std::vector<Vector> vertices;
};

SafePolytope safe_polytope(const GameSpec& g, int player, double v);

// Conditional form of safety: for every opponent action with
// p(y, a_-i) > abs_tol, r*_i(y, a_-i) >= v - tol.
bool is_safe(const GameSpec& g, int player, double v, const Vector& y, double tol = 1e-8,
             double abs_tol = 1e-12);

}  // namespace abg
