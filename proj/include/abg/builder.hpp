#pragma once

#include "abg/verifier.hpp"

#include <optional>
#include <vector>

namespace abg {

struct EtaN {
  double eta = 0.0;
  long N = 0;
};

// Smallest N with 1 - (1-p)^N >= 1 - eta.
long choose_N(double p, double eta);

EtaN choose_eta_N_case1(const double r_star[2], double p0, const double v[2], double M, double epsilon);

struct Punishers {
  MixedAction of[2];  // of[j]: mixed action player j plays to punish the opponent
  std::optional<PunisherCertificate> cert[2];
};

// Certifies a stationary punisher against each player, starting from the
// minmax candidates. Throws PunisherNotCertified.
Punishers certified_punishers(const GameSpec& g, const MinmaxReport& mm, double epsilon,
                              const VerifyOptions& opt = {});

struct BuildOptions {
  double kappa_fraction = 0.25;     // kappa target = kappa_fraction * eps
  double eta_test_fraction = 0.25;  // false-positive budget = eta_test_fraction * eps
  int max_halvings = 40;
  int max_certifications = 6;
  bool certify = true;  // false: stop at the first delta whose ledger holds
  std::vector<DeviationFamily> families = default_families();
  VerifyOptions verify;
};

EquilibriumProfile build_case1(const CaseReport& report, const GameSpec& g, const double v[2], double epsilon,
                               const Punishers& punishers);

EquilibriumProfile build_case2(const CaseReport& report, const GameSpec& g, const double v[2], double epsilon,
                               double delta, const Punishers& punishers, const BuildOptions& opt = {});

EquilibriumProfile build_case3_soft(const Witness& witness, const GameSpec& g, const double v[2], double epsilon,
                                    double delta, const MixedProfile& x0, const Punishers& punishers,
                                    const BuildOptions& opt = {});

// Big Match regime with v1 <= 1 and v1 + v2 <= 1: player 1 plays
// (1-delta) C + delta Q, player 2 plays (1-alpha) L + alpha R with
// alpha = max(0, v2). Rows: C nonabsorbing, Q absorbing.
EquilibriumProfile build_example_fixture(const GameSpec& g, const double v[2], double epsilon, double delta,
                                         const Punishers& punishers, const BuildOptions& opt = {});

// Re-evaluates the defining inequalities from the ledger alone.
std::vector<Check> check_ledger(const EquilibriumProfile& profile);

struct BuildResult {
  EquilibriumProfile profile;
  EquilibriumCertificate certificate;
  Punishers punishers;
  std::vector<double> deltas_tried;
};

// Builds for Case 1, 2 or 3-soft and certifies; for Cases 2 and 3-soft
// halves delta from eps/2 until the ledger and the certificate pass.
// Returns the last attempt when certification never passes.
BuildResult build_and_certify(const PipelineResult& pr, const GameSpec& g, double epsilon,
                              const BuildOptions& opt = {});
BuildResult build_example_and_certify(const GameSpec& g, const MinmaxReport& mm, double epsilon,
                                      const BuildOptions& opt = {});

}  // namespace abg
