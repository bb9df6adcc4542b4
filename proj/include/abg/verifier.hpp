#pragma once

#include "abg/profile.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace abg {

enum class EvalMethod { Exact, Truncated, MonteCarlo };
const char* eval_method_name(EvalMethod m);

struct PhaseOccupation {
  int phase1 = 0;
  int phase2 = 0;
  double stages = 0.0;  // expected number of stages spent there, may be infinite
};

struct EvaluationResult {
  double payoff[2] = {0.0, 0.0};
  double absorption_prob = 0.0;
  // E[theta] when absorption is certain, otherwise infinite.
  double expected_absorption_stage = std::numeric_limits<double>::infinity();
  double conditional_absorption_stage = std::numeric_limits<double>::quiet_NaN();
  std::vector<PhaseOccupation> occupation;
  std::vector<std::pair<long, double>> absorbed_by;  // (stage, P(theta <= stage))
  double test_failure_prob = 0.0;  // mass sent away by frequency tests
  EvalMethod method = EvalMethod::Exact;
};

inline constexpr long kStateCap = 100000;
inline constexpr long kTruncationHorizon = 100000;

struct ExactOptions {
  long state_cap = kStateCap;
  long horizon = kTruncationHorizon;  // T_max of the window estimator fallback
  double window = kDefaultWindow;
  std::vector<long> probes;           // stages for absorbed_by
};

EvaluationResult exact_profile_value(const StrategyMachine& m1, const StrategyMachine& m2,
                                     const GameSpec& g, const ExactOptions& opt = {});

// Pass probability of one block: counts = Multinomial(len, q) + shift,
// pass iff |count_b / B - ref_b| <= kappa for every b.
double block_pass_probability(const Vector& q, long len, const std::vector<long>& shift,
                              const Vector& ref, long B, double kappa);

struct PureStationary {};
struct MixedStationaryGrid {
  double resolution = 0.05;
};
struct ComplyThenDeviate {
  std::vector<long> switch_stages;  // first deviating stage; empty = defaults
};
struct NeverAbsorb {};

using DeviationFamily = std::variant<PureStationary, MixedStationaryGrid, ComplyThenDeviate, NeverAbsorb>;
std::string family_name(const DeviationFamily& f);
std::vector<DeviationFamily> default_families();
// Parses "pure,grid,comply,never" style lists; throws InvalidArgument.
std::vector<DeviationFamily> parse_families(const std::string& list);

struct Deviation {
  std::string family;
  std::string description;
  StrategyMachine machine;
};

// Horizon of a machine: the largest StageExpiry stage, 0 when none.
long machine_horizon(const StrategyMachine& m);
std::vector<long> default_switch_stages(long horizon);
std::vector<MixedAction> simplex_grid(int n, double resolution);

// `own` is the deviator's equilibrium machine, used by ComplyThenDeviate;
// without it that family is skipped.
std::vector<Deviation> instantiate_family(const DeviationFamily& f, const GameSpec& g, int deviator,
                                          const StrategyMachine* own);

struct VerifyOptions {
  ExactOptions exact;
  long mc_runs = 4000;  // Monte Carlo fallback when exact evaluation is unsupported
  long mc_tmax = 4000;
  std::uint64_t mc_seed = 1;
};

struct BestResponse {
  Deviation deviation;
  double value = -std::numeric_limits<double>::infinity();
  EvalMethod method = EvalMethod::Exact;
  long evaluated = 0;
  long truncated = 0;  // members evaluated without an exact tail
};

BestResponse best_response_bound(const StrategyMachine& opponent, int deviator,
                                 const std::vector<DeviationFamily>& families, const GameSpec& g,
                                 const StrategyMachine* own = nullptr, const VerifyOptions& opt = {});

inline constexpr double kCertifyTol = 1e-6;

struct PlayerCertificate {
  double base_value = 0.0;
  double best_value = 0.0;
  double gain = 0.0;
  BestResponse best;
};

struct EquilibriumCertificate {
  double target_epsilon = 0.0;
  double bound = 0.0;  // gains must not exceed bound + 1e-6
  PlayerCertificate player[2];
  std::vector<std::string> families;
  EvaluationResult on_path;
  bool certified = false;
  std::string scope = "certified within the searched deviation families only";
};

EquilibriumCertificate certify_epsilon_equilibrium(const EquilibriumProfile& profile, const GameSpec& g,
                                                   const std::vector<DeviationFamily>& families,
                                                   const VerifyOptions& opt = {});

struct PunisherCertificate {
  MixedAction punisher;
  int punished = 0;
  double threshold = 0.0;  // v + eps/2 + 1e-6
  BestResponse best;
  bool certified = false;
  std::vector<std::pair<MixedAction, double>> tried;  // candidate, best response value
};

// Families PureStationary, ComplyThenDeviate (from the punished player's
// safe action) and MixedStationaryGrid(0.05).
PunisherCertificate certify_punisher(const GameSpec& g, int punished, double v, double epsilon,
                                     const MixedAction& candidate, const MixedAction& safe,
                                     const VerifyOptions& opt = {});
// Tries y0 and `extra` as given and with weights below 1e-6, 1e-3, 1e-2
// dropped, then y0 mixed toward uniform and toward each pure action with
// weights eps, eps/2, eps/4, eps/8; throws PunisherNotCertified.
PunisherCertificate find_punisher(const GameSpec& g, int punished, double v, double epsilon,
                                  const MixedAction& y0, const MixedAction& safe,
                                  const VerifyOptions& opt = {}, const std::vector<MixedAction>& extra = {});

struct TriggerCount {
  int player = 0;
  int phase = 0;
  int trigger = 0;
  std::string kind;
  long events = 0;
};

struct SimulationReport {
  long runs = 0;
  long tmax = 0;
  std::uint64_t seed = 0;
  double mean[2] = {0.0, 0.0};
  double stddev[2] = {0.0, 0.0};
  double ci99[2] = {0.0, 0.0};  // half-widths
  double absorbed_fraction = 0.0;
  // (lower stage bound, runs) for power-of-two buckets; stage 0 = never absorbed
  std::vector<std::pair<long, long>> absorption_histogram;
  std::vector<TriggerCount> triggers;
  long frequency_test_runs = 0;  // runs in which some frequency test fired
};

inline constexpr double kZ99 = 2.576;

SimulationReport monte_carlo(const StrategyMachine& m1, const StrategyMachine& m2, const GameSpec& g,
                             long runs, long tmax, std::uint64_t seed, double window = kDefaultWindow,
                             int threads = 0);

}  // namespace abg
