#include "abg/io.hpp"

#include "abg/errors.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace abg {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

class Errors {
 public:
  explicit Errors(const std::string& text) : text_(text) {}
  void add(const std::string& where, const std::string& msg) { list_.push_back(where + ": " + msg); }
  bool empty() const { return list_.empty(); }
  std::vector<std::string>& list() { return list_; }

  // Line of the first occurrence of a top-level key, for friendlier messages.
  std::string at(const std::string& key) const {
    const auto pos = text_.find("\"" + key + "\"");
    if (pos == std::string::npos) return key;
    const long line = 1 + std::count(text_.begin(), text_.begin() + static_cast<long>(pos), '\n');
    return "line " + std::to_string(line) + ", " + key;
  }

 private:
  const std::string& text_;
  std::vector<std::string> list_;
};

bool parse_plain(std::string_view s, double& out) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

// "n/d" with integer n, d is divided once, so the double is the correctly
// rounded quotient; decimal strings go through from_chars.
bool parse_number_text(const std::string& s, double& out) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) return parse_plain(s, out);
  std::string_view num(s.data(), slash), den(s.data() + slash + 1, s.size() - slash - 1);
  long long n = 0, d = 0;
  auto trim = [](std::string_view& v) {
    while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
    while (!v.empty() && v.back() == ' ') v.remove_suffix(1);
  };
  trim(num);
  trim(den);
  auto rn = std::from_chars(num.data(), num.data() + num.size(), n);
  auto rd = std::from_chars(den.data(), den.data() + den.size(), d);
  if (rn.ec != std::errc() || rn.ptr != num.data() + num.size() || rd.ec != std::errc() ||
      rd.ptr != den.data() + den.size() || d == 0)
    return false;
  constexpr long long exact = 1LL << 53;
  if (std::llabs(n) > exact || std::llabs(d) > exact) return false;
  out = static_cast<double>(n) / static_cast<double>(d);
  return true;
}

bool read_number(const Json& j, const std::string& where, Errors& err, double& out) {
  if (j.is_number()) {
    out = j.get<double>();
    return true;
  }
  if (j.is_string() && parse_number_text(j.get<std::string>(), out)) return true;
  err.add(where, "expected a number, decimal string or fraction \"n/d\"");
  return false;
}

void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where, Errors& err) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) err.add(where, "unknown field '" + it.key() + "'");
}

std::vector<std::string> read_labels(const Json& top, const std::string& key, Errors& err) {
  std::vector<std::string> out;
  if (!top.contains(key)) {
    err.add(key, "missing field");
    return out;
  }
  const Json& a = top.at(key);
  if (!a.is_array()) {
    err.add(err.at(key), "expected an array of action labels");
    return out;
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!a[k].is_string())
      err.add(key + "[" + std::to_string(k) + "]", "action label must be a string");
    else
      out.push_back(a[k].get<std::string>());
  }
  return out;
}

// Reads an m x n table; cells may be null when `nullable`.
bool read_table(const Json& j, const std::string& where, int m, int n, bool nullable, double lo, double hi,
                Matrix& value, BoolMatrix* present, Errors& err) {
  value = Matrix::Zero(m, n);
  if (present) *present = BoolMatrix::Constant(m, n, false);
  if (!j.is_array() || static_cast<int>(j.size()) != m) {
    err.add(where, "expected " + std::to_string(m) + " rows");
    return false;
  }
  bool ok = true;
  for (int a = 0; a < m; ++a) {
    const Json& row = j[a];
    const std::string rw = where + "[" + std::to_string(a) + "]";
    if (!row.is_array() || static_cast<int>(row.size()) != n) {
      err.add(rw, "expected " + std::to_string(n) + " entries");
      ok = false;
      continue;
    }
    for (int b = 0; b < n; ++b) {
      const std::string cw = rw + "[" + std::to_string(b) + "]";
      if (row[b].is_null()) {
        if (!nullable) {
          err.add(cw, "value required");
          ok = false;
        }
        continue;
      }
      double x = 0.0;
      if (!read_number(row[b], cw, err, x)) {
        ok = false;
        continue;
      }
      if (!(x >= lo && x <= hi)) {
        err.add(cw, "value " + format_number(x) + " outside [" + format_number(lo) + "," + format_number(hi) + "]");
        ok = false;
        continue;
      }
      value(a, b) = x;
      if (present) (*present)(a, b) = true;
    }
  }
  return ok;
}

int label_index(const std::vector<std::string>& labels, const Json& j) {
  if (!j.is_string()) return -1;
  for (std::size_t k = 0; k < labels.size(); ++k)
    if (labels[k] == j.get<std::string>()) return static_cast<int>(k);
  return -1;
}

PayoffSpec read_payoff(const Json& j, const std::string& key, const GameSpec& g, Errors& err) {
  PayoffSpec s;
  const std::string where = err.at(key);
  if (!j.is_object()) {
    err.add(where, "expected an object");
    return s;
  }
  if (!j.contains("kind") || !j["kind"].is_string()) {
    err.add(where, "missing string field 'kind'");
    return s;
  }
  const std::string kind = j["kind"].get<std::string>();
  auto number = [&](const char* field, double& out) {
    if (!j.contains(field))
      err.add(key + "." + field, "missing field");
    else
      read_number(j[field], key + "." + field, err, out);
  };
  auto table = [&](Matrix& z) {
    if (!j.contains("z"))
      err.add(key + ".z", "missing field");
    else
      read_table(j["z"], key + ".z", g.rows(), g.cols(), false, 0.0, 1.0, z, nullptr, err);
  };
  auto target = [&](std::vector<JointAction>& t) {
    if (!j.contains("target") || !j["target"].is_array()) {
      err.add(key + ".target", "expected an array of [action1, action2] pairs");
      return;
    }
    const Json& arr = j["target"];
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string tw = key + ".target[" + std::to_string(k) + "]";
      if (!arr[k].is_array() || arr[k].size() != 2) {
        err.add(tw, "expected [action1, action2]");
        continue;
      }
      const int a1 = label_index(g.actions1, arr[k][0]), a2 = label_index(g.actions2, arr[k][1]);
      if (a1 < 0 || a2 < 0)
        err.add(tw, "unknown action label");
      else
        t.push_back({a1, a2});
    }
  };
  std::set<std::string> keys = {"kind", "declared_minmax"};
  if (kind == "constant") {
    ConstantPayoff c;
    number("value", c.value);
    s.rule = c;
    keys.insert("value");
  } else if (kind == "limsup-average" || kind == "even-stage-limsup-average" || kind == "limsup-stage") {
    Matrix z;
    table(z);
    if (kind == "limsup-average")
      s.rule = LimsupAverage{z};
    else if (kind == "limsup-stage")
      s.rule = LimsupStage{z};
    else
      s.rule = EvenStageLimsupAverage{z};
    keys.insert("z");
  } else if (kind == "buchi") {
    Buchi b;
    target(b.target);
    number("hit_payoff", b.hit_payoff);
    number("miss_payoff", b.miss_payoff);
    s.rule = b;
    keys.insert({"target", "hit_payoff", "miss_payoff"});
  } else if (kind == "co-buchi") {
    CoBuchi b;
    target(b.target);
    number("finite_payoff", b.finite_payoff);
    number("infinite_payoff", b.infinite_payoff);
    s.rule = b;
    keys.insert({"target", "finite_payoff", "infinite_payoff"});
  } else {
    err.add(key + ".kind", "unknown payoff kind '" + kind + "'");
    return s;
  }
  check_keys(j, keys, key, err);
  if (j.contains("declared_minmax") && !j["declared_minmax"].is_null()) {
    double d = 0.0;
    if (read_number(j["declared_minmax"], key + ".declared_minmax", err, d)) s.declared_minmax = d;
  }
  return s;
}

std::string quoted(const std::string& s) { return Json(s).dump(); }

std::string matrix_rows(const Matrix& z, const BoolMatrix* present, const std::string& indent) {
  std::string out = "[\n";
  for (int a = 0; a < z.rows(); ++a) {
    out += indent + "  [";
    for (int b = 0; b < z.cols(); ++b) {
      if (b) out += ", ";
      out += (present && !(*present)(a, b)) ? "null" : format_number(z(a, b));
    }
    out += a + 1 < z.rows() ? "],\n" : "]\n";
  }
  return out + indent + "]";
}

std::string payoff_text(const PayoffSpec& s, const GameSpec& g) {
  std::string out = "{\n    \"kind\": " + quoted(payoff_kind(s));
  auto target = [&](const std::vector<JointAction>& t) {
    std::string r = "[";
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (k) r += ", ";
      r += "[" + quoted(g.actions1[t[k].a1]) + ", " + quoted(g.actions2[t[k].a2]) + "]";
    }
    return r + "]";
  };
  std::visit(overloaded{
                 [&](const ConstantPayoff& c) { out += ",\n    \"value\": " + format_number(c.value); },
                 [&]<class T>(const T& t) requires requires(const T& u) { u.z; } {
                   out += ",\n    \"z\": " + matrix_rows(t.z, nullptr, "    ");
                 },
                 [&](const Buchi& b) {
                   out += ",\n    \"target\": " + target(b.target);
                   out += ",\n    \"hit_payoff\": " + format_number(b.hit_payoff);
                   out += ",\n    \"miss_payoff\": " + format_number(b.miss_payoff);
                 },
                 [&](const CoBuchi& b) {
                   out += ",\n    \"target\": " + target(b.target);
                   out += ",\n    \"finite_payoff\": " + format_number(b.finite_payoff);
                   out += ",\n    \"infinite_payoff\": " + format_number(b.infinite_payoff);
                 },
             },
             s.rule);
  if (s.declared_minmax) out += ",\n    \"declared_minmax\": " + format_number(*s.declared_minmax);
  return out + "\n  }";
}

Json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

Json profile_json(const MixedProfile& x, const GameSpec& g) {
  return Json{{"player1", to_json(x.x1, g.actions1)}, {"player2", to_json(x.x2, g.actions2)}};
}

Json trace_json(const std::vector<std::pair<double, double>>& t) {
  Json a = Json::array();
  for (const auto& [l, v] : t) a.push_back(Json::array({l, v}));
  return a;
}

Json witness_json(const Witness& w, const GameSpec& g) {
  return Json{{"player", w.player + 1},
              {"action", g.actions(w.player)[w.action]},
              {"opponent_mix", to_json(w.y_opp, g.actions(opponent(w.player)))},
              {"r_star", {w.r_star[0], w.r_star[1]}}};
}

}  // namespace

std::string format_number(double x) {
  if (x == 0.0) return "0";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GameSpec parse_game_text(const std::string& text) {
  Json top;
  try {
    top = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t pos = std::min<std::size_t>(e.byte ? e.byte - 1 : 0, text.size());
    const long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n');
    const auto nl = text.rfind('\n', pos ? pos - 1 : 0);
    const long col = static_cast<long>(pos - (nl == std::string::npos ? 0 : nl + 1)) + 1;
    throw ValidationError({"line " + std::to_string(line) + ", column " + std::to_string(col) + ": malformed JSON"});
  }
  Errors err(text);
  if (!top.is_object()) throw ValidationError({"document: expected a JSON object"});
  check_keys(top,
             {"schema", "actions1", "actions2", "absorb_prob", "absorb_payoff1", "absorb_payoff2", "nonabs_payoff1",
              "nonabs_payoff2", "payoff_bound"},
             "document", err);
  if (!top.contains("schema") || top["schema"] != kGameSchema)
    err.add(err.at("schema"), std::string("expected schema \"") + kGameSchema + "\"");

  GameSpec g;
  g.actions1 = read_labels(top, "actions1", err);
  g.actions2 = read_labels(top, "actions2", err);
  if (!err.empty()) throw ValidationError(err.list());
  const int m = g.rows(), n = g.cols();
  auto need = [&](const char* key) -> const Json* {
    if (top.contains(key)) return &top[key];
    err.add(key, "missing field");
    return nullptr;
  };
  if (const Json* j = need("absorb_prob"))
    read_table(*j, "absorb_prob", m, n, false, 0.0, 1.0, g.absorb_prob, nullptr, err);
  for (int pl = 0; pl < 2; ++pl) {
    const std::string key = "absorb_payoff" + std::to_string(pl + 1);
    if (const Json* j = need(key.c_str()))
      read_table(*j, key, m, n, true, -HUGE_VAL, HUGE_VAL, g.absorb_payoff[pl], &g.has_absorb_payoff[pl], err);
  }
  if (!err.empty()) throw ValidationError(err.list());
  for (int pl = 0; pl < 2; ++pl) {
    const std::string key = "nonabs_payoff" + std::to_string(pl + 1);
    if (const Json* j = need(key.c_str())) g.payoff[pl] = read_payoff(*j, key, g, err);
  }
  if (top.contains("payoff_bound")) read_number(top["payoff_bound"], err.at("payoff_bound"), err, g.payoff_bound);
  if (!err.empty()) throw ValidationError(err.list());
  return validate_game(std::move(g));
}

GameSpec parse_game_file(const std::string& path) { return parse_game_text(read_file(path)); }

std::string serialize_game(const GameSpec& g) {
  auto labels = [](const std::vector<std::string>& v) {
    std::string r = "[";
    for (std::size_t k = 0; k < v.size(); ++k) r += (k ? ", " : "") + quoted(v[k]);
    return r + "]";
  };
  std::string out = "{\n";
  out += "  \"schema\": " + quoted(kGameSchema) + ",\n";
  out += "  \"actions1\": " + labels(g.actions1) + ",\n";
  out += "  \"actions2\": " + labels(g.actions2) + ",\n";
  out += "  \"absorb_prob\": " + matrix_rows(g.absorb_prob, nullptr, "  ") + ",\n";
  for (int pl = 0; pl < 2; ++pl)
    out += "  \"absorb_payoff" + std::to_string(pl + 1) +
           "\": " + matrix_rows(g.absorb_payoff[pl], &g.has_absorb_payoff[pl], "  ") + ",\n";
  for (int pl = 0; pl < 2; ++pl)
    out += "  \"nonabs_payoff" + std::to_string(pl + 1) + "\": " + payoff_text(g.payoff[pl], g) + ",\n";
  out += "  \"payoff_bound\": " + format_number(g.payoff_bound) + "\n}\n";
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 15];
  }
  return out;
}

Json to_json(const MixedAction& x, const std::vector<std::string>& labels) {
  Json o = Json::object();
  for (int k = 0; k < x.size(); ++k)
    if (x[k] > 0.0) o[labels[k]] = x[k];
  return o;
}

Json to_json(const MinmaxReport& mm, const GameSpec& g) {
  Json players = Json::array();
  for (int i = 0; i < 2; ++i) {
    const PlayerMinmax& p = mm.player[i];
    Json o{{"player", i + 1}, {"value", p.value}, {"method", method_name(p.method)}, {"residual", p.residual}};
    o["richardson"] = p.richardson;
    o["nonconvergent"] = p.nonconvergent;
    o["projected"] = p.projected;
    o["capped"] = p.capped;
    if (p.stationary_punisher.size())
      o["stationary_punishment"] = Json{{"value", p.stationary_value},
                                        {"punisher", to_json(p.stationary_punisher, g.actions(opponent(i)))}};
    if (p.punisher.size()) o["punisher"] = to_json(p.punisher, g.actions(opponent(i)));
    if (p.safe.size()) o["safe"] = to_json(p.safe, g.actions(i));
    o["discount_trace"] = trace_json(p.discount_trace);
    players.push_back(o);
  }
  return Json{{"v", {mm.v(0), mm.v(1)}}, {"residual", mm.residual()}, {"players", players}};
}

Json to_json(const Check& c) {
  return Json{{"name", c.name}, {"lhs", num(c.lhs)},      {"rhs", num(c.rhs)},
              {"strict", c.strict}, {"slack", num(c.slack())}, {"pass", c.pass}};
}

Json to_json(const CaseReport& rep, const GameSpec& g) {
  Json o{{"case", case_name(rep.tag)},
         {"epsilon", rep.epsilon},
         {"tol", rep.tol},
         {"v", {rep.v[0], rep.v[1]}},
         {"v_inf", {rep.v_inf[0], rep.v_inf[1]}},
         {"x0", profile_json(rep.x0, g)},
         {"p0", rep.p0},
         {"r_star", {rep.r_star[0], rep.r_star[1]}},
         {"cases_holding", {rep.holds[0], rep.holds[1], rep.holds[2]}}};
  if (rep.player >= 0) {
    o["player"] = rep.player + 1;
    o["action"] = g.actions(rep.player)[rep.action];
  }
  if (rep.witness) o["witness"] = witness_json(*rep.witness, g);
  if (rep.difficult) {
    const DifficultConditions& d = *rep.difficult;
    Json dj{{"holds", d.holds},
            {"conditions", {d.cond[0], d.cond[1], d.cond[2]}},
            {"max_pair_absorption", d.max_pair_absorption},
            {"max_good_response_mass", {d.max_good_response_mass[0], d.max_good_response_mass[1]}},
            {"first_violated", d.violated}};
    if (d.max_pair.x1.size()) dj["max_pair"] = profile_json(d.max_pair, g);
    o["difficult_conditions"] = dj;
  }
  Json checks = Json::array();
  for (const auto& c : rep.checks) checks.push_back(to_json(c));
  o["checks"] = checks;
  o["warnings"] = rep.warnings;
  return o;
}

Json to_json(const PipelineResult& pr, const GameSpec& g) {
  Json trace = Json::array();
  for (const auto& e : pr.trace.entries)
    trace.push_back(Json{{"lambda", e.lambda},
                         {"x", profile_json(e.x, g)},
                         {"u", {e.u[0], e.u[1]}},
                         {"residual", e.residual}});
  Json lim{{"x0", profile_json(pr.limit.x0, g)},
           {"absorbing", pr.limit.is_absorbing},
           {"p0", pr.limit.p0},
           {"cluster_radius", pr.limit.cluster_radius},
           {"selected", pr.limit.selected}};
  Json alts = Json::array();
  for (const auto& a : pr.limit.alternatives) alts.push_back(profile_json(a, g));
  lim["alternatives"] = alts;
  Json aux{{"v_inf", {pr.aux_minmax.v_inf[0], pr.aux_minmax.v_inf[1]}},
           {"trace", {trace_json(pr.aux_minmax.trace[0]), trace_json(pr.aux_minmax.trace[1])}}};
  return Json{{"minmax", to_json(pr.minmax, g)},
              {"auxiliary_minmax", aux},
              {"discounted_trace", trace},
              {"limit_profile", lim},
              {"case_report", to_json(pr.report, g)}};
}

Json to_json(const StrategyMachine& m, const GameSpec& g) {
  const auto& own = g.actions(m.player);
  const auto& opp = g.actions(opponent(m.player));
  Json phases = Json::array();
  for (const auto& ph : m.phases) {
    Json trig = Json::array();
    for (const auto& t : ph.triggers) {
      std::visit(overloaded{
                     [&](const OutOfSupport& o) {
                       Json allowed = Json::array();
                       for (std::size_t k = 0; k < o.allowed.size(); ++k)
                         if (o.allowed[k]) allowed.push_back(opp[k]);
                       trig.push_back(Json{{"kind", "out-of-support"}, {"allowed", allowed}, {"target", o.target}});
                     },
                     [&](const FrequencyTest& f) {
                       trig.push_back(Json{{"kind", "frequency-test"},
                                           {"reference", to_json(f.spec.reference, opp)},
                                           {"block_length", f.spec.block_length},
                                           {"blocks", f.spec.blocks},
                                           {"kappa", f.spec.kappa},
                                           {"false_positive_budget", f.spec.false_positive_budget},
                                           {"target", f.target}});
                     },
                     [&](const StageExpiry& s) {
                       trig.push_back(Json{{"kind", "stage-expiry"}, {"stage", s.stage}, {"target", s.target}});
                     },
                 },
                 t);
    }
    phases.push_back(Json{{"name", ph.name},
                          {"action", to_json(ph.action, own)},
                          {"punishment", ph.punishment},
                          {"triggers", trig}});
  }
  return Json{{"player", m.player + 1}, {"initial", m.initial}, {"phases", phases}};
}

Json to_json(const EquilibriumProfile& prof, const GameSpec& g) {
  const ParameterLedger& L = prof.ledger;
  Json led{{"epsilon", L.epsilon},
           {"v", {L.v[0], L.v[1]}},
           {"r_star", {L.r_star[0], L.r_star[1]}},
           {"eta", L.eta},
           {"N", L.N},
           {"delta", L.delta},
           {"B", L.B},
           {"K", L.K},
           {"kappa", L.kappa},
           {"eta_test", L.eta_test},
           {"p_main", L.p_main},
           {"block_absorption", L.block_absorption},
           {"M", L.bound}};
  if (L.player >= 0) {
    led["player"] = L.player + 1;
    led["action"] = g.actions(L.player)[L.action];
  }
  if (L.main_profile.x1.size()) led["main_profile"] = profile_json(L.main_profile, g);
  Json ineq = Json::array();
  for (const auto& c : L.inequalities) ineq.push_back(to_json(c));
  led["inequalities"] = ineq;
  return Json{{"construction", construction_name(prof.tag)},
              {"target_epsilon", prof.target_epsilon},
              {"gain_bound", prof.gain_bound},
              {"machines", {to_json(prof.machine[0], g), to_json(prof.machine[1], g)}},
              {"ledger", led}};
}

Json to_json(const EvaluationResult& ev) {
  Json occ = Json::array();
  for (const auto& o : ev.occupation)
    occ.push_back(Json{{"phases", {o.phase1, o.phase2}}, {"stages", num(o.stages)}});
  Json by = Json::array();
  for (const auto& [t, p] : ev.absorbed_by) by.push_back(Json::array({t, p}));
  return Json{{"payoff", {ev.payoff[0], ev.payoff[1]}},
              {"method", eval_method_name(ev.method)},
              {"absorption_prob", ev.absorption_prob},
              {"expected_absorption_stage", num(ev.expected_absorption_stage)},
              {"conditional_absorption_stage", num(ev.conditional_absorption_stage)},
              {"test_failure_prob", ev.test_failure_prob},
              {"absorbed_by", by},
              {"occupation", occ}};
}

Json to_json(const EquilibriumCertificate& cert, const GameSpec& g) {
  Json players = Json::array();
  for (int i = 0; i < 2; ++i) {
    const PlayerCertificate& p = cert.player[i];
    Json o{{"player", i + 1},
           {"base_value", p.base_value},
           {"best_value", num(p.best_value)},
           {"gain", num(p.gain)},
           {"best_family", p.best.deviation.family},
           {"best_deviation", p.best.deviation.description},
           {"method", eval_method_name(p.best.method)},
           {"evaluated", p.best.evaluated},
           {"truncated", p.best.truncated}};
    if (!p.best.deviation.machine.phases.empty()) o["best_machine"] = to_json(p.best.deviation.machine, g);
    players.push_back(o);
  }
  return Json{{"certified", cert.certified},
              {"target_epsilon", cert.target_epsilon},
              {"bound", cert.bound},
              {"tolerance", kCertifyTol},
              {"families", cert.families},
              {"scope", cert.scope},
              {"on_path", to_json(cert.on_path)},
              {"players", players}};
}

Json to_json(const PunisherCertificate& cert, const GameSpec& g) {
  Json tried = Json::array();
  for (const auto& [y, val] : cert.tried)
    tried.push_back(Json{{"punisher", to_json(y, g.actions(opponent(cert.punished)))}, {"best_value", num(val)}});
  return Json{{"punished", cert.punished + 1},
              {"punisher", to_json(cert.punisher, g.actions(opponent(cert.punished)))},
              {"threshold", cert.threshold},
              {"best_value", num(cert.best.value)},
              {"best_deviation", cert.best.deviation.description},
              {"certified", cert.certified},
              {"tried", tried}};
}

Json to_json(const SimulationReport& sim) {
  Json hist = Json::array();
  for (const auto& [t, c] : sim.absorption_histogram) hist.push_back(Json::array({t, c}));
  Json trig = Json::array();
  for (const auto& t : sim.triggers)
    trig.push_back(Json{{"player", t.player + 1},
                        {"phase", t.phase},
                        {"trigger", t.trigger},
                        {"kind", t.kind},
                        {"events", t.events}});
  return Json{{"runs", sim.runs},
              {"tmax", sim.tmax},
              {"seed", sim.seed},
              {"mean", {sim.mean[0], sim.mean[1]}},
              {"stddev", {sim.stddev[0], sim.stddev[1]}},
              {"ci99", {sim.ci99[0], sim.ci99[1]}},
              {"absorbed_fraction", sim.absorbed_fraction},
              {"frequency_test_runs", sim.frequency_test_runs},
              {"absorption_histogram", hist},
              {"triggers", trig}};
}

Json report_header(const std::string& command, const std::string& input_path, const std::string& input_bytes,
                   const GameSpec& g) {
  return Json{{"schema", kReportSchema},
              {"tool", "abg"},
              {"version", kToolVersion},
              {"command", command},
              {"input", {{"path", input_path}, {"sha256", sha256_hex(input_bytes)}}},
              {"game", Json::parse(serialize_game(g))}};
}

}  // namespace abg
