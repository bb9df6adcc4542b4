#pragma once

#include "abg/minmax.hpp"

#include <optional>
#include <string>
#include <vector>

namespace abg {

struct AuxiliaryGame {
  const GameSpec* base = nullptr;
  double epsilon = 0.0;
  double v[2] = {0.0, 0.0};
  double stage_payoff[2] = {0.0, 0.0};  // v_i - epsilon
  StageGame sg;                         // p and r from base, z_i = v_i - epsilon
};

AuxiliaryGame build_auxiliary(const GameSpec& g, const double v[2], double epsilon);

struct AuxiliaryMinmax {
  double v_inf[2] = {0.0, 0.0};
  std::vector<std::pair<double, double>> trace[2];
};

inline constexpr double kSandwichTol = 1e-4;

AuxiliaryMinmax auxiliary_minmax(const AuxiliaryGame& aux, const std::vector<double>& schedule = {});

struct DiscountedEquilibrium {
  MixedProfile x;
  double u[2] = {0.0, 0.0};
  double residual = 0.0;  // largest pure stationary deviation gain
};

// Largest gain over pure stationary deviations in the lambda-discounted game.
double discounted_deviation_gain(const StageGame& sg, const MixedProfile& x, double lambda);

DiscountedEquilibrium discounted_equilibrium(const StageGame& sg, double lambda);
inline DiscountedEquilibrium discounted_equilibrium(const AuxiliaryGame& aux, double lambda) {
  return discounted_equilibrium(aux.sg, lambda);
}

struct TraceEntry {
  double lambda = 0.0;
  MixedProfile x;
  double u[2] = {0.0, 0.0};
  double residual = 0.0;
};

struct DiscountedTrace {
  std::vector<TraceEntry> entries;
};

DiscountedTrace discounted_trace(const AuxiliaryGame& aux, const std::vector<double>& schedule = {});

inline constexpr double kClusterRadius = 1e-3;

struct LimitProfile {
  MixedProfile x0;
  double cluster_radius = kClusterRadius;
  std::vector<int> selected;             // trace indices
  std::vector<MixedProfile> alternatives;  // centers of other clusters
  bool is_absorbing = false;
  double p0 = 0.0;
};

LimitProfile limit_profile(const DiscountedTrace& trace, const GameSpec& g,
                           double radius = kClusterRadius);

struct Check {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool strict = false;  // lhs > rhs rather than lhs >= rhs
  bool pass = false;
  double slack() const { return lhs - rhs; }
};

struct Witness {
  int player = 0;  // i
  int action = 0;  // a_i
  MixedAction y_opp;  // y_{-i}
  double r_star[2] = {0.0, 0.0};
};

struct DifficultConditions {
  bool holds = false;
  bool cond[3] = {false, false, false};
  double max_pair_absorption = 0.0;      // condition 1 margin
  MixedProfile max_pair;
  double max_good_response_mass[2] = {0.0, 0.0};  // conditions 2 and 3 margins
  std::optional<Witness> witness;
  int violated = 0;  // first violated condition (1..3), 0 if all hold
};

DifficultConditions difficult_conditions(const GameSpec& g, const double v[2],
                                         const SafePolytope& y1, const SafePolytope& y2,
                                         double tol = 1e-6);

enum class CaseTag { Case1, Case2, Case3Soft, Case3Hard };
const char* case_name(CaseTag t);

inline constexpr double kClassifyTol = 1e-6;

struct CaseReport {
  CaseTag tag = CaseTag::Case1;
  MixedProfile x0;
  double p0 = 0.0;
  double epsilon = 0.0;
  double tol = kClassifyTol;
  double v[2] = {0.0, 0.0};
  double v_inf[2] = {0.0, 0.0};
  double r_star[2] = {0.0, 0.0};  // Case 1: r*(x0); Case 2: r*(a_hat, x0_-i)
  int player = -1;                // Case 2 player i
  int action = -1;                // Case 2 action a_hat
  std::optional<Witness> witness; // Case 3 soft
  std::optional<DifficultConditions> difficult;
  bool holds[3] = {false, false, false};  // raw evaluation of the three cases
  std::vector<Check> checks;
  std::vector<std::string> warnings;
};

CaseReport classify(const GameSpec& g, const AuxiliaryGame& aux, const LimitProfile& lim,
                    const double v[2], double epsilon, double tol = kClassifyTol,
                    const double* v_inf = nullptr);

// Runs minmax through classification.
struct PipelineResult {
  MinmaxReport minmax;
  AuxiliaryMinmax aux_minmax;
  DiscountedTrace trace;
  LimitProfile limit;
  CaseReport report;
};

PipelineResult run_pipeline(const GameSpec& g, double epsilon, double tol = kClassifyTol,
                            const std::vector<double>& schedule = {});

}  // namespace abg
