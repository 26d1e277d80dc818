#include "habitret/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace habitret {

using numerics::exp_integral;

LognormalLaw LognormalLaw::state_price(const ModelParams& p, double t, double s, double log_Ht) {
  const double th = p.theta();
  const double dt = s - t;
  return {log_Ht - (p.r + 0.5 * th * th) * dt, th * th * dt};
}

double partial_power_moment(const LognormalLaw& law, double a, double c, Tail tail) {
  if (!(c >= 0.0)) throw std::domain_error("partial_power_moment: threshold must be non-negative");
  const double full = std::exp(a * law.mean_log + 0.5 * a * a * law.var_log);
  if (c == 0.0) return tail == Tail::below ? 0.0 : full;
  if (std::isinf(c)) return tail == Tail::below ? full : 0.0;
  if (law.var_log < 1e-12) {
    const bool below = law.mean_log < std::log(c);
    return (below == (tail == Tail::below)) ? full : 0.0;
  }
  const double sd = std::sqrt(law.var_log);
  const double d = (std::log(c) - law.mean_log - a * law.var_log) / sd;
  return full * numerics::normal_cdf(tail == Tail::below ? d : -d);
}

double compute_F(const ModelParams& p, double tau, double t, Side side) {
  if (t < 0.0 || t > p.T) throw std::domain_error("compute_F: t outside [0, T]");
  const double net = p.eta - p.psi;
  const double a = p.r + net;
  const double b = p.r + p.m * net;
  const bool pre = t < tau || (t == tau && side == Side::left);
  if (pre) {
    return p.l * p.psi * std::exp(-a * (tau - t)) * exp_integral(b, p.T - tau) + p.psi * exp_integral(a, tau - t);
  }
  return p.m * p.psi * exp_integral(b, p.T - t);
}

double compute_A(const ModelParams& p, double tau) {
  const double g = p.wage_discount_growth();
  const double stoch_end = std::min(tau, p.tau_min);
  double wage = exp_integral(-g, stoch_end);
  if (tau > p.tau_min) wage += std::exp(g * p.tau_min) * exp_integral(p.r, tau - p.tau_min);
  wage *= (1.0 - p.k) * p.W0;
  return wage + benefit_annuity(p, tau, 0.0);
}

double compute_z(const ModelParams& p, double tau, const numerics::PanelRule& rule) {
  const HabitSchedule sched(p, tau);
  const double cuts[] = {tau};
  const auto pts = numerics::composite_points(0.0, p.T, cuts, rule);
  return numerics::integrate(pts, [&](double s) {
    return sched.decay(0.0, s, false) * std::exp(-p.r * s) * (1.0 + compute_F(p, tau, s));
  });
}

double compute_z_closed(const ModelParams& p, double tau) { return habit_annuity(p, tau, 0.0); }

double compute_O(const ModelParams& p, double tau, double t) {
  if (t >= tau) return 0.0;
  if (t < p.tau_min) {
    const double g = p.wage_discount_growth();
    double o = exp_integral(-g, std::min(tau, p.tau_min) - t);
    if (tau > p.tau_min) o += std::exp(g * (p.tau_min - t)) * exp_integral(p.r, tau - p.tau_min);
    return o;
  }
  return exp_integral(p.r, tau - t);
}

double compute_N(const ModelParams& p, double tau, double s, Side side) { return 1.0 + compute_F(p, tau, s, side); }

double habit_annuity(const ModelParams& p, double tau, double t) {
  const double net = p.eta - p.psi;
  if (t < tau) {
    const double pre = std::exp(-net * t) * exp_integral(net + p.r, tau - t);
    const double post = p.l * std::exp(-net * tau - p.r * (tau - t)) * exp_integral(p.m * net + p.r, p.T - tau);
    return pre + post;
  }
  return p.l * std::exp(-net * tau - p.m * net * (t - tau)) * exp_integral(p.m * net + p.r, p.T - t);
}

double benefit_annuity(const ModelParams& p, double tau, double t) {
  const double start = std::max(t, tau);
  if (start >= p.T) return 0.0;
  return p.benefit_penalty(tau) * p.D * std::exp(p.xi * start - p.r * (start - t)) *
         exp_integral(p.r - p.xi, p.T - start);
}

std::string_view curve_name(CurveKind kind) {
  switch (kind) {
    case CurveKind::F: return "F";
    case CurveKind::N: return "N";
    case CurveKind::O: return "O";
    case CurveKind::discount: return "discount";
    case CurveKind::benefit: return "benefit";
  }
  return "?";
}

DeterministicCurve tabulate(CurveKind kind, const ModelParams& p, double tau, const TimeGrid& grid) {
  DeterministicCurve c{grid, {}, kind};
  c.values.reserve(grid.size());
  for (double t : grid.nodes()) {
    double v = 0.0;
    switch (kind) {
      case CurveKind::F: v = compute_F(p, tau, t); break;
      case CurveKind::N: v = compute_N(p, tau, t); break;
      case CurveKind::O: v = compute_O(p, tau, t); break;
      case CurveKind::discount: v = std::exp(-p.r * t); break;
      case CurveKind::benefit: v = benefit_annuity(p, tau, t); break;
    }
    c.values.push_back(v);
  }
  return c;
}

}  // namespace habitret
