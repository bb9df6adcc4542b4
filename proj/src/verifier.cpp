#include "abg/verifier.hpp"

#include "abg/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <thread>

namespace abg {

const char* eval_method_name(EvalMethod m) {
  switch (m) {
    case EvalMethod::Exact:
      return "exact";
    case EvalMethod::Truncated:
      return "truncated";
    case EvalMethod::MonteCarlo:
      return "monte-carlo";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using Row = Eigen::RowVectorXd;

struct StageModel {
  Matrix Q;  // nonabsorbed transitions between phase pairs
  Vector alpha;
  Vector ar[2];  // sum_a x(a) p(a) r_i(a)
};

// P = Q^L, S = sum_{k<L} Q^k, W = sum_{k<L} k Q^k.
struct PowerTriple {
  Matrix P, S, W;
  long len = 0;
};

PowerTriple compose(const PowerTriple& a, const PowerTriple& b) {
  PowerTriple c;
  c.P = a.P * b.P;
  c.S = a.S + a.P * b.S;
  c.W = a.W + a.P * (b.W + static_cast<double>(a.len) * b.S);
  c.len = a.len + b.len;
  return c;
}

PowerTriple power_triple(const Matrix& Q, long L) {
  const int n = static_cast<int>(Q.rows());
  PowerTriple result{Matrix::Identity(n, n), Matrix::Zero(n, n), Matrix::Zero(n, n), 0};
  PowerTriple base{Q, Matrix::Identity(n, n), Matrix::Zero(n, n), 1};
  while (L > 0) {
    if (L & 1) result = compose(result, base);
    L >>= 1;
    if (L) base = compose(base, base);
  }
  return result;
}

// Expected value of the truncated window estimator over W i.i.d. stages.
double window_estimate(const PayoffSpec& spec, const MixedProfile& x, long W) {
  const Vector& w1 = x.x1.weights();
  const Vector& w2 = x.x2.weights();
  auto mass = [&](const std::vector<JointAction>& S) {
    double m = 0.0;
    for (const auto& c : S) m += w1[c.a1] * w2[c.a2];
    return std::min(1.0, m);
  };
  const double Wd = static_cast<double>(W);
  if (const auto* b = std::get_if<Buchi>(&spec.rule)) {
    const double miss = std::pow(1.0 - mass(b->target), Wd);
    return b->hit_payoff * (1.0 - miss) + b->miss_payoff * miss;
  }
  if (const auto* b = std::get_if<CoBuchi>(&spec.rule)) {
    const double absent = std::pow(1.0 - mass(b->target), Wd);
    return b->finite_payoff * absent + b->infinite_payoff * (1.0 - absent);
  }
  const auto& z = std::get<LimsupStage>(spec.rule).z;
  std::map<double, double> dist;
  for (int a = 0; a < w1.size(); ++a)
    for (int b = 0; b < w2.size(); ++b)
      if (w1[a] * w2[b] > 0.0) dist[z(a, b)] += w1[a] * w2[b];
  double cdf = 0.0, prev = 0.0, out = 0.0;
  for (const auto& [val, pr] : dist) {
    cdf = std::min(1.0, cdf + pr);
    const double now = std::pow(cdf, Wd);
    out += val * (now - prev);
    prev = now;
  }
  return out;
}

class ProductChain {
 public:
  ProductChain(const StrategyMachine& m1, const StrategyMachine& m2, const GameSpec& g, long cap)
      : g_(g) {
    m_[0] = &m1;
    m_[1] = &m2;
    n2_ = m2.size();
    const long n = static_cast<long>(m1.size()) * m2.size();
    if (n > cap) throw StateCapExceeded("product chain has " + std::to_string(n) + " states");
    n_ = static_cast<int>(n);
    for (int pl = 0; pl < 2; ++pl) {
      const StrategyMachine& m = *m_[pl];
      for (int k = 0; k < m.size(); ++k) {
        const auto& trig = m.phase(k).triggers;
        for (size_t j = 0; j < trig.size(); ++j) {
          if (trigger_target(trig[j]) == m.initial && k != m.initial &&
              m.phase(m.initial).triggers.size() > 0)
            reentry_[pl] = true;
          if (const auto* e = std::get_if<StageExpiry>(&trig[j])) {
            if (e->stage >= 2) changes_.push_back(e->stage);
          } else if (const auto* f = std::get_if<FrequencyTest>(&trig[j])) {
            if (k != m.initial)
              throw UnsupportedExactEvaluation("frequency test outside the initial phase");
            if (owner_ >= 0 && owner_ != pl)
              throw UnsupportedExactEvaluation("frequency tests in both machines");
            owner_ = pl;
            test_ = f;
            test_index_ = static_cast<int>(j);
          }
        }
      }
    }
    if (owner_ >= 0 && reentry_[owner_])
      throw UnsupportedExactEvaluation("frequency test phase can be re-entered");
    std::sort(changes_.begin(), changes_.end());
    changes_.erase(std::unique(changes_.begin(), changes_.end()), changes_.end());
  }

  int n() const { return n_; }
  int index(int p1, int p2) const { return p1 * n2_ + p2; }
  int phase(int s, int pl) const { return pl == 0 ? s / n2_ : s % n2_; }
  int owner() const { return owner_; }
  const FrequencyTest* test() const { return test_; }
  int test_index() const { return test_index_; }
  const std::vector<long>& changes() const { return changes_; }
  const StrategyMachine& machine(int pl) const { return *m_[pl]; }
  int initial() const { return index(m_[0]->initial, m_[1]->initial); }

  // Segment id: number of change points <= t.
  int segment(long t) const {
    return static_cast<int>(std::upper_bound(changes_.begin(), changes_.end(), t) - changes_.begin());
  }

  int next_state(int s, int a1, int a2, long t, int suppress) const {
    const int p1 = phase(s, 0), p2 = phase(s, 1);
    const int n1 = step_phase(*m_[0], p1, a2, t, s == suppress && owner_ == 0);
    const int n2 = step_phase(*m_[1], p2, a1, t, s == suppress && owner_ == 1);
    return index(n1, n2);
  }

  StageModel model(long t, int suppress = -1) const {
    StageModel M;
    M.Q = Matrix::Zero(n_, n_);
    M.alpha = Vector::Zero(n_);
    M.ar[0] = Vector::Zero(n_);
    M.ar[1] = Vector::Zero(n_);
    for (int s = 0; s < n_; ++s) {
      const MixedAction& x = m_[0]->phase(phase(s, 0)).action;
      const MixedAction& y = m_[1]->phase(phase(s, 1)).action;
      for (int a1 : x.support())
        for (int a2 : y.support()) {
          const double w = x[a1] * y[a2];
          const double pr = g_.p(a1, a2);
          M.alpha[s] += w * pr;
          for (int i = 0; i < 2; ++i) M.ar[i][s] += w * pr * g_.r(i, a1, a2);
          if (pr < 1.0) M.Q(s, next_state(s, a1, a2, t, suppress)) += w * (1.0 - pr);
        }
    }
    return M;
  }

  bool is_carrier(int s) const { return owner_ >= 0 && phase(s, owner_) == m_[owner_]->initial; }

  // Unique carrier state reached from carrier c; -1 when none.
  int carrier_successor(const StageModel& M, int c) const {
    int succ = -1;
    for (int s = 0; s < n_; ++s) {
      if (M.Q(c, s) <= 0.0 || !is_carrier(s)) continue;
      if (succ >= 0)
        throw UnsupportedExactEvaluation(
            "monitored machine changes phase at a random time during a frequency test");
      succ = s;
    }
    return succ;
  }

  // Distribution of the monitored action given that play stays in the test
  // and moves from c to succ.
  Vector carrier_q(int c, int succ, long t, int suppress) const {
    const int mon = opponent(owner_);
    Vector q = Vector::Zero(g_.num_actions(mon));
    const MixedAction& x = m_[0]->phase(phase(c, 0)).action;
    const MixedAction& y = m_[1]->phase(phase(c, 1)).action;
    for (int a1 : x.support())
      for (int a2 : y.support()) {
        const double pr = g_.p(a1, a2);
        if (pr >= 1.0 || next_state(c, a1, a2, t, suppress) != succ) continue;
        q[mon == 0 ? a1 : a2] += x[a1] * y[a2] * (1.0 - pr);
      }
    return q / q.sum();
  }

 private:
  const GameSpec& g_;
  const StrategyMachine* m_[2];
  int n_ = 0, n2_ = 0;
  int owner_ = -1;
  const FrequencyTest* test_ = nullptr;
  int test_index_ = -1;
  bool reentry_[2] = {false, false};
  std::vector<long> changes_;
};

struct BlockPieces {
  std::vector<std::pair<Vector, long>> pieces;

  void add(const Vector& q, long len) {
    for (auto& [pq, plen] : pieces)
      if ((pq - q).cwiseAbs().maxCoeff() <= 1e-14) {
        plen += len;
        return;
      }
    pieces.emplace_back(q, len);
  }

  double pass_probability(const StatTestSpec& spec,
                         std::vector<std::pair<std::vector<std::pair<Vector, long>>, double>>& cache) const {
    for (const auto& [key, val] : cache) {
      if (key.size() != pieces.size()) continue;
      bool same = true;
      for (size_t k = 0; k < key.size() && same; ++k)
        same = key[k].second == pieces[k].second && key[k].first == pieces[k].first;
      if (same) return val;
    }
    const double val = compute(spec);
    cache.emplace_back(pieces, val);
    return val;
  }

  double compute(const StatTestSpec& spec) const {
    const int k = spec.reference.size();
    std::vector<long> shift(k, 0);
    const Vector* mixed = nullptr;
    long mixed_len = 0;
    for (const auto& [q, len] : pieces) {
      int top = 0;
      q.maxCoeff(&top);
      if (q[top] >= 1.0 - 1e-15) {
        shift[top] += len;
      } else if (mixed) {
        throw UnsupportedExactEvaluation("several mixed monitored phases inside one test block");
      } else {
        mixed = &q;
        mixed_len = len;
      }
    }
    const Vector q = mixed ? *mixed : Vector(Vector::Unit(k, 0));
    return block_pass_probability(q, mixed ? mixed_len : 0, shift, spec.reference.weights(),
                                  spec.block_length, spec.kappa);
  }
};

}  // namespace

double block_pass_probability(const Vector& q_in, long len, const std::vector<long>& shift,
                              const Vector& ref, long B, double kappa) {
  const int k = static_cast<int>(ref.size());
  auto passes = [&](int b, long c) {
    return !(std::abs(static_cast<double>(c) / static_cast<double>(B) - ref[b]) > kappa);
  };
  // Window of mixed counts m_b with shift_b + m_b passing.
  std::vector<long> lo(k), hi(k);
  for (int b = 0; b < k; ++b) {
    const long center = std::clamp(std::lround(ref[b] * static_cast<double>(B)), 0L, B);
    long l = center, h = center;
    if (!passes(b, center)) {
      // The reference itself fails only when kappa is tiny; scan outward.
      long found = -1;
      for (long c = 0; c <= B && found < 0; ++c)
        if (passes(b, c)) found = c;
      if (found < 0) return 0.0;
      l = h = found;
    }
    while (l > 0 && passes(b, l - 1)) --l;
    while (h < B && passes(b, h + 1)) ++h;
    lo[b] = std::max(0L, l - shift[b]);
    hi[b] = std::min(len, h - shift[b]);
    if (lo[b] > hi[b]) return 0.0;
  }
  if (len == 0) return 1.0;

  Vector q = q_in.cwiseMax(0.0);
  q /= q.sum();
  std::vector<int> cats;
  for (int b = 0; b < k; ++b) {
    if (q[b] <= 0.0) {
      if (lo[b] > 0) return 0.0;
    } else {
      cats.push_back(b);
    }
  }
  // Hoeffding short circuit on each coordinate.
  for (int b : cats) {
    const double mean = q[b] * static_cast<double>(len);
    const double gap = std::max(static_cast<double>(lo[b]) - mean, mean - static_cast<double>(hi[b]));
    if (gap > 0.0 && std::exp(-2.0 * gap * gap / static_cast<double>(len)) < 1e-16) return 0.0;
  }
  const int m = static_cast<int>(cats.size());
  std::vector<double> tail(m + 1, 0.0);
  for (int j = m - 1; j >= 0; --j) tail[j] = tail[j + 1] + q[cats[j]];

  std::vector<std::vector<double>> memo(m, std::vector<double>(len + 1, -1.0));
  auto f = [&](auto&& self, int j, long n) -> double {
    const int b = cats[j];
    if (j == m - 1) return (n >= lo[b] && n <= hi[b]) ? 1.0 : 0.0;
    double& slot = memo[j][n];
    if (slot >= 0.0) return slot;
    const double rho = std::min(1.0, q[b] / tail[j]);
    double acc = 0.0;
    if (rho >= 1.0) {
      acc = (n >= lo[b] && n <= hi[b]) ? self(self, j + 1, 0) : 0.0;
    } else {
      const double mean = rho * static_cast<double>(n);
      const double sd = std::sqrt(static_cast<double>(n) * rho * (1.0 - rho));
      const long from = std::max(lo[b], static_cast<long>(std::floor(mean - 9.0 * sd - 1.0)));
      const long to = std::min({hi[b], n, static_cast<long>(std::ceil(mean + 9.0 * sd + 1.0))});
      const double lr = std::log(rho), l1r = std::log1p(-rho);
      const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
      for (long c = std::max(0L, from); c <= to; ++c) {
        const double lp = lgn - std::lgamma(static_cast<double>(c) + 1.0) -
                          std::lgamma(static_cast<double>(n - c) + 1.0) + static_cast<double>(c) * lr +
                          static_cast<double>(n - c) * l1r;
        const double pmf = std::exp(lp);
        if (pmf < 1e-300) continue;
        acc += pmf * self(self, j + 1, n - c);
      }
    }
    slot = std::min(1.0, acc);
    return slot;
  };
  return f(f, 0, len);
}

EvaluationResult exact_profile_value(const StrategyMachine& m1, const StrategyMachine& m2,
                                     const GameSpec& g, const ExactOptions& opt) {
  if (m1.player != 0 || m2.player != 1) throw InvalidArgument("machines must be ordered by player");
  validate_machine(m1, g);
  validate_machine(m2, g);
  const ProductChain pc(m1, m2, g, opt.state_cap);
  const int n = pc.n();

  EvaluationResult res;
  Row mu = Row::Zero(n);
  mu[pc.initial()] = 1.0;
  double absorbed = 0.0, pay[2] = {0.0, 0.0}, theta = 0.0;
  Row occ = Row::Zero(n);
  bool truncated = false;

  std::map<int, StageModel> models;
  std::map<std::pair<int, long>, PowerTriple> powers;
  auto model_at = [&](long t) -> const StageModel& {
    const int seg = pc.segment(t);
    auto it = models.find(seg);
    if (it == models.end()) it = models.emplace(seg, pc.model(t)).first;
    return it->second;
  };
  auto advance = [&](const StageModel& M, const PowerTriple& pt, long t0) {
    const Row muS = mu * pt.S;
    absorbed += muS.dot(M.alpha);
    for (int i = 0; i < 2; ++i) pay[i] += muS.dot(M.ar[i]);
    theta += static_cast<double>(t0) * muS.dot(M.alpha) + (mu * pt.W).dot(M.alpha);
    occ += muS;
    mu = mu * pt.P;
  };

  const int owner = pc.owner();
  int carrier = owner >= 0 ? pc.initial() : -1;
  std::vector<long> block_ends;
  if (owner >= 0)
    for (long k = 1; k <= pc.test()->spec.blocks; ++k) block_ends.push_back(k * pc.test()->spec.block_length);
  std::vector<long> probes = opt.probes;
  std::sort(probes.begin(), probes.end());
  probes.erase(std::unique(probes.begin(), probes.end()), probes.end());
  BlockPieces pieces;
  std::vector<std::pair<std::vector<std::pair<Vector, long>>, double>> pass_cache;
  size_t ie = 0, ip = 0;

  // Follows the carrier through L stages of M starting at t, recording the
  // monitored action distribution of each stage.
  auto track = [&](const StageModel& M, long t, long L, int suppress) {
    if (ie >= block_ends.size()) return;
    long k = 0, guard = 0;
    while (k < L && carrier >= 0) {
      const int succ = pc.carrier_successor(M, carrier);
      if (succ < 0) {
        carrier = -1;
        break;
      }
      const Vector q = pc.carrier_q(carrier, succ, t, suppress);
      if (succ == carrier) {
        pieces.add(q, L - k);
        break;
      }
      pieces.add(q, 1);
      carrier = succ;
      ++k;
      if (++guard > n + 2) throw UnsupportedExactEvaluation("carrier cycles between phase pairs");
    }
  };

  const auto& changes = pc.changes();
  long t = 1;
  while (true) {
    auto itc = std::upper_bound(changes.begin(), changes.end(), t);
    const long next_c = itc == changes.end() ? std::numeric_limits<long>::max() : *itc;
    while (ie < block_ends.size() && block_ends[ie] < t) ++ie;
    while (ip < probes.size() && probes[ip] < t) ++ip;
    const long next_e = (carrier >= 0 && ie < block_ends.size()) ? block_ends[ie] : std::numeric_limits<long>::max();
    const long next_p = ip < probes.size() ? probes[ip] : std::numeric_limits<long>::max();
    if (next_c == std::numeric_limits<long>::max() && next_e == std::numeric_limits<long>::max() &&
        next_p == std::numeric_limits<long>::max())
      break;
    const long end = std::min({next_c - 1, next_e, next_p});
    const bool block_end = end == next_e;
    const long plain = end - t + 1 - (block_end ? 1 : 0);
    if (plain > 0) {
      const StageModel& M = model_at(t);
      track(M, t, plain, -1);
      const auto key = std::make_pair(pc.segment(t), plain);
      auto it = powers.find(key);
      if (it == powers.end()) it = powers.emplace(key, power_triple(M.Q, plain)).first;
      advance(M, it->second, t);
      t += plain;
    }
    if (block_end) {
      // Trigger order in the owner's test phase decides whether an expiry
      // due at this stage pre-empts the test or follows it.
      // The carrier may have died inside the block; then this is a plain stage.
      int expiry_index = -1, expiry_target = -1;
      if (carrier >= 0) {
        const auto& trig = pc.machine(owner).phase(pc.phase(carrier, owner)).triggers;
        for (size_t j = 0; j < trig.size(); ++j)
          if (const auto* e = std::get_if<StageExpiry>(&trig[j]); e && t >= e->stage) {
            expiry_index = static_cast<int>(j);
            expiry_target = e->target;
            break;
          }
      }
      const bool suppress = carrier >= 0 && expiry_index > pc.test_index();
      const StageModel Mb = suppress ? pc.model(t, carrier) : model_at(t);
      track(Mb, t, 1, suppress ? carrier : -1);
      advance(Mb, power_triple(Mb.Q, 1), t);
      if (carrier >= 0) {
        const double pass = pieces.pass_probability(pc.test()->spec, pass_cache);
        const double mass = mu[carrier];
        const int mon_phase = pc.phase(carrier, opponent(owner));
        auto with_owner = [&](int ph) { return owner == 0 ? pc.index(ph, mon_phase) : pc.index(mon_phase, ph); };
        const double fail = (1.0 - pass) * mass;
        mu[carrier] -= fail;
        mu[with_owner(pc.test()->target)] += fail;
        res.test_failure_prob += fail;
        if (suppress) {
          mu[with_owner(expiry_target)] += mu[carrier];
          mu[carrier] = 0.0;
          carrier = -1;
        }
      }
      pieces.pieces.clear();
      ++t;
    }
    if (ip < probes.size() && probes[ip] == t - 1) res.absorbed_by.emplace_back(t - 1, absorbed);
  }

  // Homogeneous tail.
  const StageModel& M = model_at(t);
  std::vector<bool> reach(n, false);
  std::vector<int> stack;
  for (int s = 0; s < n; ++s)
    if (mu[s] > 0.0) reach[s] = true, stack.push_back(s);
  while (!stack.empty()) {
    const int s = stack.back();
    stack.pop_back();
    for (int u = 0; u < n; ++u)
      if (M.Q(s, u) > 0.0 && !reach[u]) reach[u] = true, stack.push_back(u);
  }
  std::vector<int> T, K;
  for (int s = 0; s < n; ++s) {
    if (!reach[s]) continue;
    if (M.alpha[s] <= 0.0 && M.Q(s, s) >= 1.0 - 1e-12)
      K.push_back(s);
    else
      T.push_back(s);
  }
  Row sink_mass = Row::Zero(n);
  for (int s : K) sink_mass[s] = mu[s];
  if (!T.empty()) {
    const int nt = static_cast<int>(T.size());
    Matrix A(nt, nt);
    Row muT(nt);
    Vector aT(nt), rT[2] = {Vector(nt), Vector(nt)};
    for (int i = 0; i < nt; ++i) {
      muT[i] = mu[T[i]];
      aT[i] = M.alpha[T[i]];
      rT[0][i] = M.ar[0][T[i]];
      rT[1][i] = M.ar[1][T[i]];
      for (int j = 0; j < nt; ++j) A(i, j) = (i == j ? 1.0 : 0.0) - M.Q(T[i], T[j]);
    }
    Eigen::FullPivLU<Matrix> lu(A);
    lu.setThreshold(1e-13);
    if (lu.rank() < nt)
      throw UnsupportedExactEvaluation("recurrent class spanning several phase pairs");
    const Matrix X = lu.inverse();
    const Row o = muT * X;
    absorbed += o.dot(aT);
    for (int i = 0; i < 2; ++i) pay[i] += o.dot(rT[i]);
    const Vector y = X * aT;
    Matrix QTT(nt, nt);
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < nt; ++j) QTT(i, j) = M.Q(T[i], T[j]);
    theta += static_cast<double>(t) * muT.dot(y) + (muT * QTT).dot(X * y);
    for (int i = 0; i < nt; ++i) occ[T[i]] += o[i];
    for (int s : K)
      for (int i = 0; i < nt; ++i) sink_mass[s] += o[i] * M.Q(T[i], s);
  }
  for (int s : K) {
    if (sink_mass[s] <= 0.0) continue;
    occ[s] = kInf;
    const MixedProfile x{m1.phase(pc.phase(s, 0)).action, m2.phase(pc.phase(s, 1)).action};
    for (int i = 0; i < 2; ++i) {
      double val = 0.0;
      try {
        val = iid_nonabsorbing_value(x, i, g);
      } catch (const UnsupportedExactEvaluation&) {
        const long W = opt.horizon - window_start(opt.horizon, opt.window) + 1;
        val = window_estimate(g.payoff[i], x, W);
        truncated = true;
      }
      pay[i] += sink_mass[s] * val;
    }
  }

  res.payoff[0] = pay[0];
  res.payoff[1] = pay[1];
  res.absorption_prob = std::min(1.0, absorbed);
  if (absorbed > 0.0) res.conditional_absorption_stage = theta / absorbed;
  if (absorbed >= 1.0 - 1e-12) res.expected_absorption_stage = theta;
  for (int s = 0; s < n; ++s)
    if (occ[s] > 1e-15) res.occupation.push_back({pc.phase(s, 0), pc.phase(s, 1), occ[s]});
  res.method = truncated ? EvalMethod::Truncated : EvalMethod::Exact;
  return res;
}

// ---------------------------------------------------------------------------
// Deviation families

std::string family_name(const DeviationFamily& f) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, PureStationary>) return "PureStationary";
        if constexpr (std::is_same_v<T, MixedStationaryGrid>) {
          std::ostringstream os;
          os << "MixedStationaryGrid(" << x.resolution << ")";
          return os.str();
        }
        if constexpr (std::is_same_v<T, ComplyThenDeviate>) return "ComplyThenDeviate";
        return "NeverAbsorb";
      },
      f);
}

std::vector<DeviationFamily> default_families() {
  return {PureStationary{}, ComplyThenDeviate{}, MixedStationaryGrid{0.05}};
}

std::vector<DeviationFamily> parse_families(const std::string& list) {
  std::vector<DeviationFamily> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "pure") {
      out.push_back(PureStationary{});
    } else if (item == "comply") {
      out.push_back(ComplyThenDeviate{});
    } else if (item == "never") {
      out.push_back(NeverAbsorb{});
    } else if (item.rfind("grid", 0) == 0) {
      double res = 0.05;
      if (item.size() > 4) {
        if (item[4] != ':') throw InvalidArgument("bad family '" + item + "'");
        res = std::stod(item.substr(5));
      }
      if (!(res > 0.0 && res <= 1.0)) throw InvalidArgument("grid resolution must lie in (0,1]");
      out.push_back(MixedStationaryGrid{res});
    } else {
      throw InvalidArgument("unknown deviation family '" + item + "'");
    }
  }
  if (out.empty()) throw InvalidArgument("empty family list");
  return out;
}

long machine_horizon(const StrategyMachine& m) {
  long h = 0;
  for (const auto& ph : m.phases)
    for (const auto& t : ph.triggers)
      if (const auto* e = std::get_if<StageExpiry>(&t)) h = std::max(h, e->stage);
  return h;
}

std::vector<long> default_switch_stages(long horizon) {
  std::vector<long> s = {1, 2, (horizon + 1) / 2, horizon - 1, horizon, horizon + 1};
  std::vector<long> out;
  for (long v : s)
    if (v >= 1) out.push_back(v);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<MixedAction> simplex_grid(int n, double resolution) {
  const int steps = std::max(1, static_cast<int>(std::lround(1.0 / resolution)));
  std::vector<MixedAction> out;
  std::vector<int> c(n, 0);
  auto rec = [&](auto&& self, int i, int left) -> void {
    if (i == n - 1) {
      c[i] = left;
      Vector w(n);
      for (int k = 0; k < n; ++k) w[k] = static_cast<double>(c[k]) / steps;
      out.emplace_back(w);
      return;
    }
    for (int v = left; v >= 0; --v) {
      c[i] = v;
      self(self, i + 1, left - v);
    }
  };
  rec(rec, 0, steps);
  return out;
}

namespace {

std::string describe(const GameSpec& g, int player, const MixedAction& x) {
  std::ostringstream os;
  bool first = true;
  for (int a : x.support()) {
    if (!first) os << " + ";
    first = false;
    if (x[a] < 1.0) os << x[a] << "*";
    os << g.actions(player)[a];
  }
  return os.str();
}

}  // namespace

std::vector<Deviation> instantiate_family(const DeviationFamily& f, const GameSpec& g, int deviator,
                                          const StrategyMachine* own) {
  const int n = g.num_actions(deviator);
  const std::string fname = family_name(f);
  std::vector<Deviation> out;
  if (std::holds_alternative<PureStationary>(f)) {
    for (int a = 0; a < n; ++a) {
      const auto x = MixedAction::pure(n, a);
      out.push_back({fname, "stationary " + describe(g, deviator, x), stationary_machine(deviator, x)});
    }
  } else if (const auto* grid = std::get_if<MixedStationaryGrid>(&f)) {
    for (const auto& x : simplex_grid(n, grid->resolution))
      out.push_back({fname, "stationary " + describe(g, deviator, x), stationary_machine(deviator, x)});
  } else if (const auto* ctd = std::get_if<ComplyThenDeviate>(&f)) {
    if (!own) return out;
    const auto stages = ctd->switch_stages.empty() ? default_switch_stages(machine_horizon(*own))
                                                   : ctd->switch_stages;
    for (long s : stages)
      for (int a = 0; a < n; ++a)
        out.push_back({fname,
                       "comply through stage " + std::to_string(s - 1) + ", then " +
                           g.actions(deviator)[a],
                       comply_then_deviate(*own, s - 1, a)});
  } else {
    std::vector<int> rows;
    for (int a = 0; a < n; ++a) {
      bool zero = true;
      for (int b = 0; b < g.num_actions(opponent(deviator)) && zero; ++b)
        zero = (deviator == 0 ? g.p(a, b) : g.p(b, a)) == 0.0;
      if (zero) rows.push_back(a);
    }
    for (int a : rows) {
      const auto x = MixedAction::pure(n, a);
      out.push_back({fname, "stationary " + describe(g, deviator, x), stationary_machine(deviator, x)});
    }
    if (rows.size() >= 2) {
      Vector w = Vector::Zero(n);
      for (int a : rows) w[a] = 1.0 / static_cast<double>(rows.size());
      const MixedAction x(w);
      out.push_back({fname, "stationary " + describe(g, deviator, x), stationary_machine(deviator, x)});
    }
  }
  return out;
}

namespace {

struct Valued {
  double value;
  double lower;  // conservative value when the profile is on path
  EvalMethod method;
};

Valued evaluate_pair(const StrategyMachine& a, const StrategyMachine& b, int player, const GameSpec& g,
                     const VerifyOptions& opt) {
  const StrategyMachine& m1 = a.player == 0 ? a : b;
  const StrategyMachine& m2 = a.player == 0 ? b : a;
  try {
    const auto r = exact_profile_value(m1, m2, g, opt.exact);
    return {r.payoff[player], r.payoff[player], r.method};
  } catch (const UnsupportedExactEvaluation&) {
    const auto s = monte_carlo(m1, m2, g, opt.mc_runs, opt.mc_tmax, opt.mc_seed);
    return {s.mean[player] + s.ci99[player], s.mean[player] - s.ci99[player], EvalMethod::MonteCarlo};
  }
}

}  // namespace

BestResponse best_response_bound(const StrategyMachine& opp, int deviator,
                                 const std::vector<DeviationFamily>& families, const GameSpec& g,
                                 const StrategyMachine* own, const VerifyOptions& opt) {
  if (opp.player != opponent(deviator)) throw InvalidArgument("opponent machine belongs to the deviator");
  BestResponse best;
  for (const auto& f : families) {
    for (auto& dev : instantiate_family(f, g, deviator, own)) {
      const Valued v = evaluate_pair(dev.machine, opp, deviator, g, opt);
      ++best.evaluated;
      if (v.method != EvalMethod::Exact) ++best.truncated;
      if (v.value > best.value) {
        best.value = v.value;
        best.method = v.method;
        best.deviation = std::move(dev);
      }
    }
  }
  if (best.evaluated == 0) throw InvalidArgument("deviation families are empty");
  return best;
}

EquilibriumCertificate certify_epsilon_equilibrium(const EquilibriumProfile& profile, const GameSpec& g,
                                                   const std::vector<DeviationFamily>& families,
                                                   const VerifyOptions& opt) {
  EquilibriumCertificate cert;
  cert.target_epsilon = profile.target_epsilon;
  cert.bound = profile.gain_bound;
  for (const auto& f : families) cert.families.push_back(family_name(f));
  double base[2];
  try {
    cert.on_path = exact_profile_value(profile.machine[0], profile.machine[1], g, opt.exact);
    base[0] = cert.on_path.payoff[0];
    base[1] = cert.on_path.payoff[1];
  } catch (const UnsupportedExactEvaluation&) {
    const auto s = monte_carlo(profile.machine[0], profile.machine[1], g, opt.mc_runs, opt.mc_tmax, opt.mc_seed);
    cert.on_path.method = EvalMethod::MonteCarlo;
    cert.on_path.absorption_prob = s.absorbed_fraction;
    for (int i = 0; i < 2; ++i) {
      cert.on_path.payoff[i] = s.mean[i];
      base[i] = s.mean[i] - s.ci99[i];
    }
  }
  cert.certified = true;
  for (int d = 0; d < 2; ++d) {
    PlayerCertificate& pc = cert.player[d];
    pc.base_value = base[d];
    pc.best = best_response_bound(profile.machine[opponent(d)], d, families, g, &profile.machine[d], opt);
    pc.best_value = pc.best.value;
    pc.gain = pc.best_value - pc.base_value;
    if (pc.gain > cert.bound + kCertifyTol) cert.certified = false;
  }
  return cert;
}

PunisherCertificate certify_punisher(const GameSpec& g, int punished, double v, double epsilon,
                                     const MixedAction& candidate, const MixedAction& safe,
                                     const VerifyOptions& opt) {
  PunisherCertificate pc;
  pc.punisher = candidate;
  pc.punished = punished;
  pc.threshold = v + epsilon / 2.0 + kCertifyTol;
  const StrategyMachine opp = stationary_machine(opponent(punished), candidate, "punish");
  const StrategyMachine own = stationary_machine(punished, safe, "safe");
  const std::vector<DeviationFamily> fams = {PureStationary{}, ComplyThenDeviate{}, MixedStationaryGrid{0.05}};
  pc.best = best_response_bound(opp, punished, fams, g, &own, opt);
  pc.certified = pc.best.value <= pc.threshold;
  pc.tried.emplace_back(candidate, pc.best.value);
  return pc;
}

namespace {

// Discounted solutions leave O(lambda) weight on actions that are harmless
// under discounting but fatal over an infinite horizon.
MixedAction snapped(const MixedAction& y, double threshold) {
  Vector w = y.weights();
  for (int k = 0; k < w.size(); ++k)
    if (w[k] < threshold) w[k] = 0.0;
  if (w.sum() <= 0.0) return y;
  return MixedAction(w / w.sum());
}

}  // namespace

PunisherCertificate find_punisher(const GameSpec& g, int punished, double v, double epsilon,
                                  const MixedAction& y0, const MixedAction& safe, const VerifyOptions& opt,
                                  const std::vector<MixedAction>& extra) {
  const int n = y0.size();
  std::vector<MixedAction> bases = {y0};
  for (double thr : {1e-6, 1e-3, 1e-2}) bases.push_back(snapped(y0, thr));
  for (const auto& e : extra) {
    bases.push_back(e);
    for (double thr : {1e-6, 1e-3, 1e-2}) bases.push_back(snapped(e, thr));
  }
  std::vector<MixedAction> candidates;
  auto push = [&](const MixedAction& c) {
    for (const auto& d : candidates)
      if ((d.weights() - c.weights()).cwiseAbs().maxCoeff() < 1e-12) return;
    candidates.push_back(c);
  };
  for (const auto& b : bases) push(b);
  for (const auto& b : {y0, bases[1]})
    for (double t : {epsilon, epsilon / 2.0, epsilon / 4.0, epsilon / 8.0}) {
      push(b.mix(MixedAction::uniform(n), t));
      for (int a = 0; a < n; ++a) push(b.mix(MixedAction::pure(n, a), t));
    }
  std::vector<std::pair<MixedAction, double>> tried;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    auto pc = certify_punisher(g, punished, v, epsilon, c, safe, opt);
    tried.push_back(pc.tried.front());
    best = std::min(best, pc.best.value);
    if (pc.certified) {
      pc.tried = tried;
      return pc;
    }
  }
  std::ostringstream os;
  os << "no stationary punisher holds player " << punished + 1 << " within " << epsilon / 2.0
     << " of v = " << v << " (best candidate value " << best << ")";
  throw PunisherNotCertified(os.str());
}

// ---------------------------------------------------------------------------
// Monte Carlo

namespace {

struct RunOutcome {
  double pay[2] = {0.0, 0.0};
  long absorbed_at = 0;
  bool test_fired = false;
  std::vector<std::array<int, 3>> fired;  // player, phase, trigger
};

int sample(const MixedAction& x, std::mt19937_64& rng) {
  const Vector& w = x.weights();
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  const int n = static_cast<int>(w.size());
  int last = 0;
  for (int k = 0; k < n; ++k) {
    if (w[k] <= 0.0) continue;
    last = k;
    acc += w[k];
    if (u < acc) return k;
  }
  return last;
}

RunOutcome simulate_run(const StrategyMachine& m1, const StrategyMachine& m2, const GameSpec& g, long tmax,
                        double window, std::uint64_t seed, long run) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(static_cast<std::uint64_t>(run) >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  MachineRunner r1(m1), r2(m2);
  TailEstimator est[2] = {TailEstimator(g.payoff[0], tmax, window), TailEstimator(g.payoff[1], tmax, window)};
  RunOutcome out;
  for (long t = 1; t <= tmax; ++t) {
    const int a1 = sample(r1.action(), rng);
    const int a2 = sample(r2.action(), rng);
    const double p = g.p(a1, a2);
    if (p > 0.0 && unif(rng) < p) {
      out.absorbed_at = t;
      out.pay[0] = g.r(0, a1, a2);
      out.pay[1] = g.r(1, a1, a2);
      return out;
    }
    est[0].feed(t, {a1, a2});
    est[1].feed(t, {a1, a2});
    const int ph1 = r1.phase(), ph2 = r2.phase();
    if (const int k = r1.observe(a2, t); k >= 0) {
      out.fired.push_back({0, ph1, k});
      if (std::holds_alternative<FrequencyTest>(m1.phase(ph1).triggers[k])) out.test_fired = true;
    }
    if (const int k = r2.observe(a1, t); k >= 0) {
      out.fired.push_back({1, ph2, k});
      if (std::holds_alternative<FrequencyTest>(m2.phase(ph2).triggers[k])) out.test_fired = true;
    }
  }
  out.pay[0] = est[0].value();
  out.pay[1] = est[1].value();
  return out;
}

}  // namespace

SimulationReport monte_carlo(const StrategyMachine& m1, const StrategyMachine& m2, const GameSpec& g, long runs,
                             long tmax, std::uint64_t seed, double window, int threads) {
  if (runs < 1 || tmax < 1) throw InvalidArgument("runs and tmax must be >= 1");
  validate_machine(m1, g);
  validate_machine(m2, g);
  std::vector<RunOutcome> outcomes(runs);
  int nt = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  nt = static_cast<int>(std::min<long>(nt, std::max(1L, runs / 64)));
  auto work = [&](long from, long to) {
    for (long r = from; r < to; ++r) outcomes[r] = simulate_run(m1, m2, g, tmax, window, seed, r);
  };
  if (nt <= 1) {
    work(0, runs);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nt);
    for (int k = 0; k < nt; ++k) {
      const long from = runs * k / nt, to = runs * (k + 1) / nt;
      pool.emplace_back([&, k, from, to] {
        try {
          work(from, to);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  SimulationReport rep;
  rep.runs = runs;
  rep.tmax = tmax;
  rep.seed = seed;
  double sum[2] = {0, 0}, sq[2] = {0, 0};
  long absorbed = 0;
  std::map<long, long> hist;
  std::map<std::array<int, 3>, long> fired;
  for (const auto& o : outcomes) {
    for (int i = 0; i < 2; ++i) {
      sum[i] += o.pay[i];
      sq[i] += o.pay[i] * o.pay[i];
    }
    long bucket = 0;
    if (o.absorbed_at > 0) {
      ++absorbed;
      bucket = 1;
      while (bucket * 2 <= o.absorbed_at) bucket *= 2;
    }
    ++hist[bucket];
    for (const auto& f : o.fired) ++fired[f];
    if (o.test_fired) ++rep.frequency_test_runs;
  }
  const double R = static_cast<double>(runs);
  for (int i = 0; i < 2; ++i) {
    rep.mean[i] = sum[i] / R;
    const double var = runs > 1 ? std::max(0.0, (sq[i] - R * rep.mean[i] * rep.mean[i]) / (R - 1.0)) : 0.0;
    rep.stddev[i] = std::sqrt(var);
    rep.ci99[i] = kZ99 * rep.stddev[i] / std::sqrt(R) + 1e-9;
  }
  rep.absorbed_fraction = static_cast<double>(absorbed) / R;
  rep.absorption_histogram.assign(hist.begin(), hist.end());
  for (const auto& [key, count] : fired) {
    const StrategyMachine& m = key[0] == 0 ? m1 : m2;
    const Trigger& trig = m.phase(key[1]).triggers[key[2]];
    const char* kind = std::holds_alternative<OutOfSupport>(trig)    ? "out-of-support"
                       : std::holds_alternative<FrequencyTest>(trig) ? "frequency-test"
                                                                     : "stage-expiry";
    rep.triggers.push_back({key[0], key[1], key[2], kind, count});
  }
  return rep;
}

}  // namespace abg
