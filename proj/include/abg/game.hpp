#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace abg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Players are indexed 0 and 1 internally; reports print them as 1 and 2.
inline int opponent(int player) { return 1 - player; }

struct JointAction {
  int a1 = 0;
  int a2 = 0;
  int of(int player) const { return player == 0 ? a1 : a2; }
  bool operator==(const JointAction&) const = default;
  auto operator<=>(const JointAction&) const = default;
};

struct ConstantPayoff {
  double value = 0.0;
};
struct LimsupAverage {
  Matrix z;
};
struct EvenStageLimsupAverage {
  Matrix z;
};
struct LimsupStage {
  Matrix z;
};
struct Buchi {
  std::vector<JointAction> target;
  double hit_payoff = 1.0;
  double miss_payoff = 0.0;
};
struct CoBuchi {
  std::vector<JointAction> target;
  double finite_payoff = 1.0;
  double infinite_payoff = 0.0;
};

using PayoffRule = std::variant<ConstantPayoff, LimsupAverage, EvenStageLimsupAverage,
                                LimsupStage, Buchi, CoBuchi>;

struct PayoffSpec {
  PayoffRule rule = ConstantPayoff{};
  std::optional<double> declared_minmax;
};

const char* payoff_kind(const PayoffSpec& spec);
// Largest and smallest value the nonabsorbing payoff can take.
std::pair<double, double> payoff_range(const PayoffSpec& spec);

struct GameSpec {
  std::vector<std::string> actions1;
  std::vector<std::string> actions2;
  Matrix absorb_prob;                // |A1| x |A2|
  Matrix absorb_payoff[2];           // zero where absent
  BoolMatrix has_absorb_payoff[2];   // false where the file gave no value
  PayoffSpec payoff[2];
  double payoff_bound = 1.0;

  int rows() const { return static_cast<int>(actions1.size()); }
  int cols() const { return static_cast<int>(actions2.size()); }
  int num_actions(int player) const { return player == 0 ? rows() : cols(); }
  const std::vector<std::string>& actions(int player) const {
    return player == 0 ? actions1 : actions2;
  }
  double p(int a1, int a2) const { return absorb_prob(a1, a2); }
  double r(int player, int a1, int a2) const { return absorb_payoff[player](a1, a2); }
};

// Checks every invariant and returns the game unchanged, or throws
// ValidationError listing all violations.
GameSpec validate_game(GameSpec raw);

inline constexpr double kSumTolerance = 1e-12;
inline constexpr double kSupportThreshold = 1e-15;

class MixedAction {
 public:
  MixedAction() = default;
  explicit MixedAction(Vector weights);

  static MixedAction pure(int n, int k);
  static MixedAction uniform(int n);

  const Vector& weights() const { return w_; }
  double operator[](int k) const { return w_[k]; }
  int size() const { return static_cast<int>(w_.size()); }
  bool in_support(int k) const { return w_[k] > kSupportThreshold; }
  std::vector<int> support() const;
  bool is_pure() const { return support().size() == 1; }
  MixedAction mix(const MixedAction& other, double t) const;  // (1-t)*this + t*other

  bool operator==(const MixedAction& o) const { return w_ == o.w_; }

 private:
  Vector w_;
};

struct MixedProfile {
  MixedAction x1;
  MixedAction x2;
  const MixedAction& of(int player) const { return player == 0 ? x1 : x2; }
  MixedAction& of(int player) { return player == 0 ? x1 : x2; }
};

// Profile where `player` uses `own` and the opponent uses `other`.
MixedProfile make_profile(int player, const MixedAction& own, const MixedAction& other);

struct RunPrefix {
  std::vector<JointAction> stages;
  std::optional<int> absorbed_at;  // 1-based stage index
};

double absorption_prob(const MixedProfile& x, const GameSpec& g);
double conditional_absorbing_payoff(const MixedProfile& x, int player, const GameSpec& g);
// Almost-sure value of the nonabsorbing payoff when x is played i.i.d. forever.
double iid_nonabsorbing_value(const MixedProfile& x, int player, const GameSpec& g);
double stationary_payoff(const MixedProfile& x, int player, const GameSpec& g);

inline constexpr double kDefaultWindow = 0.5;

struct RunEstimate {
  double value = 0.0;
  bool exact = false;
};

RunEstimate evaluate_run(const RunPrefix& prefix, const GameSpec& g, int player,
                         double window = kDefaultWindow);

// Streaming version of the truncated estimator for a run of known horizon.
// Stages are fed in order with 1-based indices.
class TailEstimator {
 public:
  TailEstimator(const PayoffSpec& spec, long horizon, double window);
  long window_start() const { return start_; }
  void feed(long stage, const JointAction& a);
  double value() const;  // throws EmptyWindow

 private:
  const PayoffSpec* spec_;
  long start_;
  long count_ = 0;
  double sum_ = 0.0;
  double max_ = 0.0;
  bool hit_ = false;
};

// First stage index of the window covering the last ceil(window*T) stages.
long window_start(long horizon, double window);

}  // namespace abg
