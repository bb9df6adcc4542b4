#include "abg/minmax.hpp"

#include "abg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace abg {

const char* method_name(MinmaxMethod m) {
  switch (m) {
    case MinmaxMethod::VanishingDiscount:
      return "vanishing-discount";
    case MinmaxMethod::Declared:
      return "declared";
    case MinmaxMethod::OneShot:
      return "oneshot-fixed-point-check";
  }
  return "?";
}

namespace {

Matrix oriented(const Matrix& m, int player) { return player == 0 ? m : Matrix(m.transpose()); }

}  // namespace

OneShotAuxiliary one_shot_auxiliary(const GameSpec& g, int player, double v) {
  const Matrix p = oriented(g.absorb_prob, player);
  const Matrix r = oriented(g.absorb_payoff[player], player);
  OneShotAuxiliary out;
  out.matrix = p.cwiseProduct(r) + (Matrix::Ones(p.rows(), p.cols()) - p) * v;
  out.solution = zero_sum_value(out.matrix);
  const Vector& y = out.solution.row_optimal.weights();
  double slack = std::numeric_limits<double>::infinity();
  for (int b = 0; b < p.cols(); ++b) {
    const double mass = y.dot(p.col(b));
    if (mass > 1e-12) slack = std::min(slack, y.dot(p.col(b).cwiseProduct(r.col(b))) / mass - v);
  }
  out.lemma_slack = std::isfinite(slack) ? slack : 0.0;
  out.lemma_holds = out.lemma_slack >= -1e-9;
  return out;
}

double project_onto_fixed_points(const GameSpec& g, int player, double v) {
  auto f = [&](double x) { return one_shot_auxiliary(g, player, x).solution.value - x; };
  const double fv = f(v);
  if (std::abs(fv) <= 1e-10) return v;
  // Bisect toward the zero set; f(lo) > 0 > f(hi) at every step.
  double lo = fv > 0.0 ? v : -g.payoff_bound, hi = fv > 0.0 ? g.payoff_bound : v;
  for (int it = 0; it < 100 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::abs(fm) <= 1e-10) {
      if (fv > 0.0) hi = mid; else lo = mid;
    } else if (fm > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return fv > 0.0 ? hi : lo;
}

double stationary_reply_value(const StageGame& sg, int player, int a, const Vector& y) {
  const ZeroSumStageGame zs = zero_sum_view(sg, player);
  const double mass = zs.p.row(a).dot(y);
  if (mass > 0.0) return zs.p.row(a).cwiseProduct(zs.r.row(a)).dot(y) / mass;
  return zs.z.row(a).dot(y);
}

double stationary_best_reply(const StageGame& sg, int player, const Vector& y) {
  double best = -std::numeric_limits<double>::infinity();
  const int m = player == 0 ? sg.rows() : sg.cols();
  for (int a = 0; a < m; ++a) best = std::max(best, stationary_reply_value(sg, player, a, y));
  return best;
}

StationaryPunishment stationary_punishment(const StageGame& sg, int player) {
  const ZeroSumStageGame zs = zero_sum_view(sg, player);
  const int m = static_cast<int>(zs.p.rows()), n = static_cast<int>(zs.p.cols());
  const Matrix pr = zs.p.cwiseProduct(zs.r);
  const double lo0 = std::min(zs.r.minCoeff(), zs.z.minCoeff());
  const double hi0 = std::max(zs.r.maxCoeff(), zs.z.maxCoeff());
  StationaryPunishment best{std::numeric_limits<double>::infinity(), MixedAction::uniform(n)};

  for (int mask = 1; mask < (1 << n); ++mask) {
    auto poly_at = [&](double t) {
      SimplexPolytope poly{n, Matrix::Zero(0, n), Vector(0)};
      for (int b = 0; b < n; ++b)
        if (!(mask >> b & 1)) poly = poly.with_constraint(-Vector::Unit(n, b), 0.0);
      for (int a = 0; a < m; ++a) {
        bool absorbs = false;
        for (int b = 0; b < n; ++b)
          if ((mask >> b & 1) && zs.p(a, b) > 0.0) absorbs = true;
        if (absorbs)
          poly = poly.with_constraint(-(pr.row(a) - t * zs.p.row(a)).transpose(), 0.0);
        else
          poly = poly.with_constraint(-zs.z.row(a).transpose(), -t);
      }
      return poly;
    };
    // A relative-interior point must use every column of the mask; smaller
    // supports are handled by their own mask.
    auto interior = [&](double t) -> std::optional<Vector> {
      const auto verts = enumerate_vertices(poly_at(t));
      if (verts.empty()) return std::nullopt;
      Vector c = Vector::Zero(n);
      for (const auto& v : verts) c += v;
      c /= static_cast<double>(verts.size());
      for (int b = 0; b < n; ++b)
        if ((mask >> b & 1) && c[b] <= 1e-12) return std::nullopt;
      return c;
    };
    auto at_hi = interior(hi0);
    if (!at_hi) continue;
    double lo = lo0, hi = hi0;
    Vector y = *at_hi;
    for (int it = 0; it < 60 && hi - lo > 1e-13; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (auto c = interior(mid)) {
        hi = mid;
        y = *c;
      } else {
        lo = mid;
      }
    }
    for (int b = 0; b < n; ++b)
      if (!(mask >> b & 1)) y[b] = 0.0;
    y /= y.sum();
    const double val = stationary_best_reply(sg, player, y);
    if (val < best.value) best = {val, MixedAction(y)};
  }
  return best;
}

bool is_safe(const GameSpec& g, int player, double v, const Vector& y, double tol,
             double abs_tol) {
  const Matrix p = oriented(g.absorb_prob, player);
  const Matrix r = oriented(g.absorb_payoff[player], player);
  for (int b = 0; b < p.cols(); ++b) {
    const double mass = y.dot(p.col(b));
    if (mass > abs_tol && y.dot(p.col(b).cwiseProduct(r.col(b))) / mass < v - tol) return false;
  }
  return true;
}

SafePolytope safe_polytope(const GameSpec& g, int player, double v) {
  const Matrix p = oriented(g.absorb_prob, player);
  const Matrix r = oriented(g.absorb_payoff[player], player);
  SafePolytope out;
  out.player = player;
  out.target_value = v;
  out.poly.dim = static_cast<int>(p.rows());
  out.poly.A = (p.cwiseProduct(r.array().matrix() - Matrix::Constant(p.rows(), p.cols(), v)))
                   .transpose();
  out.poly.b = Vector::Zero(p.cols());
  out.vertices = enumerate_vertices(out.poly);
  return out;
}

MinmaxReport minmax_values(const GameSpec& g, const std::vector<double>& schedule_in) {
  const std::vector<double> schedule = schedule_in.empty() ? default_lambda_schedule() : schedule_in;
  const StageGame sg = stage_game_of(g);
  const bool all_absorbing = (g.absorb_prob.array() == 1.0).all();
  MinmaxReport rep;
  for (int i = 0; i < 2; ++i) {
    PlayerMinmax& pm = rep.player[i];
    const PayoffSpec& spec = g.payoff[i];
    if (spec.declared_minmax) {
      pm.method = MinmaxMethod::Declared;
      pm.value = *spec.declared_minmax;
      const auto aux = one_shot_auxiliary(g, i, pm.value);
      pm.punisher = aux.solution.col_optimal;
    } else if (all_absorbing) {
      pm.method = MinmaxMethod::OneShot;
      const auto sol = zero_sum_value(oriented(g.absorb_payoff[i], i));
      pm.value = sol.value;
      pm.punisher = sol.col_optimal;
    } else if (std::holds_alternative<ConstantPayoff>(spec.rule) ||
               std::holds_alternative<LimsupAverage>(spec.rule)) {
      pm.method = MinmaxMethod::VanishingDiscount;
      const auto vd = vanishing_discount_value(zero_sum_view(sg, i), schedule);
      pm.value = std::clamp(vd.value, 0.0, 1.0);
      const double projected = project_onto_fixed_points(g, i, pm.value);
      pm.projected = projected != pm.value;
      pm.value = projected;
      pm.discount_trace = vd.trace;
      pm.richardson = vd.richardson;
      pm.nonconvergent = vd.nonconvergent;
      pm.punisher = vd.last.stage.col_optimal;
      // Extrapolation can overshoot; no value above a stationary punishment
      // is possible, and that bound sits above the fixed-point set's floor.
      const StationaryPunishment sp = stationary_punishment(sg, i);
      pm.stationary_punisher = sp.punisher;
      pm.stationary_value = sp.value;
      if (pm.value > sp.value) {
        pm.value = sp.value;
        pm.capped = true;
      }
    } else {
      throw UnsupportedPayoffForMinmax(std::string("player ") + std::to_string(i + 1) + " payoff '" +
                                       payoff_kind(spec) +
                                       "' has no automatic minmax; supply declared_minmax");
    }
    const auto aux = one_shot_auxiliary(g, i, pm.value);
    pm.safe = aux.solution.row_optimal;
    pm.residual = std::abs(aux.solution.value - pm.value);
    if (pm.residual > kMinmaxResidualTol)
      throw InconsistentMinmax("player " + std::to_string(i + 1) +
                               ": one-shot consistency residual " + std::to_string(pm.residual) +
                               " exceeds tolerance");
  }
  return rep;
}

}  // namespace abg
