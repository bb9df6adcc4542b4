#include "abg/machine.hpp"

#include "abg/errors.hpp"

#include <cmath>

namespace abg {

double hoeffding_kappa(int num_actions, long blocks, double eta_test, long block_length) {
  return std::sqrt(std::log(2.0 * num_actions * static_cast<double>(blocks) / eta_test) /
                   (2.0 * static_cast<double>(block_length)));
}

StatTestSpec statistical_test_params(const MixedAction& x_ref, long blocks, double eta_test,
                                     long block_length) {
  if (block_length < 1 || blocks < 1) throw InvalidArgument("block length and count must be >= 1");
  if (!(eta_test > 0.0 && eta_test < 1.0)) throw InvalidArgument("eta_test must lie in (0,1)");
  const double kappa = hoeffding_kappa(x_ref.size(), blocks, eta_test, block_length);
  if (!(kappa < 1.0))
    throw KappaOutOfRange("kappa = " + std::to_string(kappa) + " >= 1; block length " +
                          std::to_string(block_length) + " too short");
  return StatTestSpec{x_ref, block_length, blocks, kappa, eta_test};
}

int trigger_target(const Trigger& t) {
  return std::visit([](const auto& x) { return x.target; }, t);
}

void validate_machine(const StrategyMachine& m, const GameSpec& g) {
  const int own = g.num_actions(m.player), opp = g.num_actions(opponent(m.player));
  if (m.phases.empty()) throw InvalidArgument("machine has no phases");
  if (m.initial < 0 || m.initial >= m.size()) throw InvalidArgument("initial phase out of range");
  for (const auto& ph : m.phases) {
    if (ph.action.size() != own)
      throw InvalidArgument("phase '" + ph.name + "' mixes over the wrong action set");
    if (ph.punishment && !ph.triggers.empty())
      throw InvalidArgument("punishment phase '" + ph.name + "' must be terminal");
    bool seen_test = false;
    for (const auto& t : ph.triggers) {
      if (std::holds_alternative<FrequencyTest>(t)) {
        if (seen_test) throw InvalidArgument("phase '" + ph.name + "' has two frequency tests");
        seen_test = true;
      }
      if (seen_test && std::holds_alternative<OutOfSupport>(t))
        throw InvalidArgument("phase '" + ph.name + "': out-of-support triggers must precede the frequency test");
      const int target = trigger_target(t);
      if (target < 0 || target >= m.size())
        throw InvalidArgument("phase '" + ph.name + "' has a trigger to a missing phase");
      if (const auto* o = std::get_if<OutOfSupport>(&t); o && static_cast<int>(o->allowed.size()) != opp)
        throw InvalidArgument("out-of-support mask has the wrong size");
      if (const auto* f = std::get_if<FrequencyTest>(&t); f && f->spec.reference.size() != opp)
        throw InvalidArgument("frequency test reference has the wrong size");
    }
  }
}

StrategyMachine stationary_machine(int player, const MixedAction& x, std::string name) {
  StrategyMachine m;
  m.player = player;
  m.phases.push_back(Phase{std::move(name), x, {}, false});
  return m;
}

StrategyMachine comply_then_deviate(const StrategyMachine& m, long after, int action) {
  const int n = m.phases.front().action.size();
  const std::string dev_name = "deviate-" + std::to_string(action);
  if (after <= 0) return stationary_machine(m.player, MixedAction::pure(n, action), dev_name);
  StrategyMachine out = m;
  const int dev = out.size();
  for (auto& ph : out.phases) {
    ph.triggers.insert(ph.triggers.begin(), StageExpiry{after, dev});
    ph.punishment = false;
  }
  out.phases.push_back(Phase{dev_name, MixedAction::pure(n, action), {}, false});
  return out;
}

int step_phase(const StrategyMachine& m, int phase, int opp_action, long stage, bool skip_expiry) {
  for (const auto& t : m.phase(phase).triggers) {
    if (const auto* o = std::get_if<OutOfSupport>(&t)) {
      if (!o->allowed[opp_action]) return o->target;
    } else if (const auto* e = std::get_if<StageExpiry>(&t)) {
      if (!skip_expiry && stage >= e->stage) return e->target;
    }
  }
  return phase;
}

MachineRunner::MachineRunner(const StrategyMachine& m) : m_(&m) { enter(m.initial, 1); }

void MachineRunner::enter(int phase, long stage) {
  phase_ = phase;
  entered_ = stage;
  counts_.clear();
  for (const auto& t : m_->phase(phase).triggers)
    if (const auto* f = std::get_if<FrequencyTest>(&t))
      counts_.assign(f->spec.reference.size(), 0);
}

int MachineRunner::observe(int opp_action, long stage) {
  if (!counts_.empty()) ++counts_[opp_action];
  const auto& triggers = m_->phase(phase_).triggers;
  for (size_t k = 0; k < triggers.size(); ++k) {
    const Trigger& t = triggers[k];
    bool fire = false;
    if (const auto* o = std::get_if<OutOfSupport>(&t)) {
      fire = !o->allowed[opp_action];
    } else if (const auto* f = std::get_if<FrequencyTest>(&t)) {
      const long into = stage - entered_ + 1;
      const long B = f->spec.block_length;
      if (into % B == 0 && into / B <= f->spec.blocks) {
        for (int b = 0; b < f->spec.reference.size() && !fire; ++b)
          fire = std::abs(static_cast<double>(counts_[b]) / static_cast<double>(B) -
                          f->spec.reference[b]) > f->spec.kappa;
        std::fill(counts_.begin(), counts_.end(), 0);
      }
    } else {
      fire = stage >= std::get<StageExpiry>(t).stage;
    }
    if (fire) {
      enter(trigger_target(t), stage + 1);
      return static_cast<int>(k);
    }
  }
  return -1;
}

}  // namespace abg
