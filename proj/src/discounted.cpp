#include "abg/discounted.hpp"

#include "abg/errors.hpp"

#include <cmath>

namespace abg {

Matrix shapley_matrix(const ZeroSumStageGame& g, double lambda, double v) {
  const Matrix cont = (lambda * g.z.array() + (1.0 - lambda) * v).matrix();
  Matrix out = g.p.cwiseProduct(g.r);
  for (int a = 0; a < g.p.rows(); ++a)
    for (int b = 0; b < g.p.cols(); ++b)
      if (g.p(a, b) < 1.0) out(a, b) += (1.0 - g.p(a, b)) * cont(a, b);
  return out;
}

// f(v) = val(T(v)) - v is strictly decreasing with slope <= -lambda, so the
// fixed point is bracketed by the payoff range and found by safeguarded
// regula falsi. Plain value iteration would need O(1/lambda) sweeps.
DiscountedSolution shapley_discounted_value(const ZeroSumStageGame& g, double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw InvalidArgument("lambda must lie in (0,1)");
  double lo = std::min(g.r.minCoeff(), g.z.minCoeff());
  double hi = std::max(g.r.maxCoeff(), g.z.maxCoeff());
  auto f = [&](double v) { return zero_sum_value(shapley_matrix(g, lambda, v)).value - v; };
  double flo = f(lo), fhi = f(hi);
  if (flo <= 0.0) hi = lo, fhi = flo;
  if (fhi >= 0.0) lo = hi, flo = fhi;
  int side = 0;
  for (int iter = 0; iter < 400 && hi - lo > 1e-15; ++iter) {
    double mid = (lo * fhi - hi * flo) / (fhi - flo);
    if (!(mid > lo && mid < hi) || iter % 4 == 3) mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if (fm > 0.0) {
      lo = mid, flo = fm;
      if (side == 1) fhi *= 0.5;
      side = 1;
    } else {
      hi = mid, fhi = fm;
      if (side == -1) flo *= 0.5;
      side = -1;
    }
  }
  DiscountedSolution out;
  out.value = 0.5 * (lo + hi);
  out.stage = zero_sum_value(shapley_matrix(g, lambda, out.value));
  out.residual = std::abs(out.stage.value - out.value);
  return out;
}

std::vector<double> default_lambda_schedule() {
  std::vector<double> s;
  for (int n = 1; n <= 20; ++n) s.push_back(std::ldexp(1.0, -n));
  return s;
}

VanishingDiscountResult vanishing_discount_value(const ZeroSumStageGame& g,
                                                 const std::vector<double>& schedule) {
  if (schedule.empty()) throw InvalidArgument("empty lambda schedule");
  for (size_t k = 1; k < schedule.size(); ++k)
    if (!(schedule[k] < schedule[k - 1])) throw InvalidArgument("lambda schedule must decrease");
  VanishingDiscountResult out;
  for (double lam : schedule) {
    out.last = shapley_discounted_value(g, lam);
    out.trace.emplace_back(lam, out.last.value);
  }
  const size_t n = out.trace.size();
  out.value = out.trace.back().second;
  if (n >= 6) {
    int sign = 0;
    bool consistent = true;
    for (size_t k = n - 5; k < n; ++k) {
      const double d = out.trace[k].second - out.trace[k - 1].second;
      if (std::abs(d) <= 1e-13) {
        consistent = false;
        break;
      }
      const int s = d > 0 ? 1 : -1;
      if (sign != 0 && s != sign) consistent = false;
      sign = s;
    }
    // One Richardson step. The error order is read off the last two
    // differences (Puiseux tails are often sqrt(lambda)); when that ratio is
    // unusable, fall back to error linear in lambda.
    if (consistent) {
      const double d1 = out.trace[n - 1].second - out.trace[n - 2].second;
      const double d0 = out.trace[n - 2].second - out.trace[n - 3].second;
      const double rho = d1 / d0;
      if (rho > 0.05 && rho < 0.95) {
        out.value = out.trace[n - 1].second + d1 * rho / (1.0 - rho);
      } else {
        const double ratio = schedule[n - 2] / schedule[n - 1];
        out.value = (ratio * out.trace[n - 1].second - out.trace[n - 2].second) / (ratio - 1.0);
      }
      out.richardson = true;
    }
  }
  if (n >= 2 && std::abs(out.trace[n - 1].second - out.trace[n - 2].second) > 1e-3)
    out.nonconvergent = true;
  return out;
}

}  // namespace abg
