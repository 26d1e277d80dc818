#include "habitret/lifecycle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <limits>

#include "habitret/analytics.hpp"

namespace habitret {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool better(double v, double tau, double best_v, double best_tau) {
  return v > best_v || (v == best_v && tau < best_tau);
}

template <class Body>
void for_each_index(std::size_t n, bool parallel, Body&& body) {
  std::exception_ptr error;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(habitret_lifecycle_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

double expected_utility(const DualSolution& dual, double s, Side side) {
  const ModelParams& p = dual.params;
  const double g1 = 1.0 - p.gamma;
  const double disc = std::exp(-p.rho * s);
  const double loss = -p.kappa * std::pow(p.L, g1) / g1;
  if (dual.nu_infinite) return disc * loss;
  const auto law = LognormalLaw::state_price(p, 0.0, s);
  const double b = dual.tangency.degenerate ? std::numeric_limits<double>::infinity() : dual.threshold_H(s, side);
  const double a2 = -g1 / p.gamma;
  const double gain = std::pow(dual.consumption_scale(s, side), g1) / g1 * partial_power_moment(law, a2, b, Tail::below);
  const double lossy = p.L > 0.0 ? loss * partial_power_moment(law, 0.0, b, Tail::above) : 0.0;
  return disc * (gain + lossy);
}

TauEvaluation evaluate_tau(const ModelParams& p, double tau, const LifecycleOptions& opts) {
  TauEvaluation ev;
  ev.tau = tau;
  ev.A = compute_A(p, tau);
  try {
    const DualSolution dual = solve_nu(p, tau, opts.dual);
    const double cuts[] = {tau};
    const auto pts = numerics::composite_points(0.0, p.T, cuts, opts.value_rule);
    ev.V = numerics::integrate(pts, [&](double s) { return expected_utility(dual, s); });
    ev.nu = dual.nu;
    ev.feasible = true;
  } catch (const InfeasibleError& e) {
    ev.V = kNegInf;
    ev.nu = std::numeric_limits<double>::infinity();
    ev.diagnostic = e.what();
  }
  return ev;
}

double value_of_tau(const ModelParams& p, double tau, const LifecycleOptions& opts) {
  return evaluate_tau(p, tau, opts).V;
}

LifecycleReport optimize_tau(const ModelParams& p, double grid_step, const LifecycleOptions& opts) {
  if (!(grid_step > 0.0)) throw std::invalid_argument("optimize_tau: grid_step must be positive");
  p.validate();
  LifecycleReport rep;
  for (double tau = p.tau_min;; tau += grid_step) {
    if (tau > p.tau_max - 1e-9 * grid_step) break;
    rep.tau_grid.push_back(tau);
  }
  rep.tau_grid.push_back(p.tau_max);
  if (p.tau_st > p.tau_min && p.tau_st < p.tau_max) rep.tau_grid.push_back(p.tau_st);
  std::sort(rep.tau_grid.begin(), rep.tau_grid.end());
  rep.tau_grid.erase(std::unique(rep.tau_grid.begin(), rep.tau_grid.end(),
                                 [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                     rep.tau_grid.end());

  const std::size_t n = rep.tau_grid.size();
  rep.V_values.assign(n, 0.0);
  rep.A_values.assign(n, 0.0);
  for_each_index(n, opts.parallel, [&](std::size_t i) {
    const auto ev = evaluate_tau(p, rep.tau_grid[i], opts);
    rep.V_values[i] = ev.V;
    rep.A_values[i] = ev.A;
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (better(rep.V_values[i], rep.tau_grid[i], rep.V_values[best], rep.tau_grid[best])) best = i;
  if (rep.V_values[best] == kNegInf) throw InfeasibleError("optimize_tau: every retirement time is infeasible");

  double best_tau = rep.tau_grid[best];
  double best_v = rep.V_values[best];
  double lo = best > 0 ? rep.tau_grid[best - 1] : best_tau;
  double hi = best + 1 < n ? rep.tau_grid[best + 1] : best_tau;
  auto consider = [&](double tau, double v) {
    if (better(v, tau, best_v, best_tau)) {
      best_v = v;
      best_tau = tau;
    }
  };

  // Golden section on the bracket around the best node.
  constexpr double inv_phi = 0.61803398874989484820;
  constexpr double resolution = 0.05;
  if (hi - lo > resolution) {
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double v1 = value_of_tau(p, x1, opts);
    double v2 = value_of_tau(p, x2, opts);
    consider(x1, v1);
    consider(x2, v2);
    while (b - a > resolution) {
      if (v1 >= v2) {
        b = x2;
        x2 = x1;
        v2 = v1;
        x1 = b - inv_phi * (b - a);
        v1 = value_of_tau(p, x1, opts);
        consider(x1, v1);
      } else {
        a = x1;
        x1 = x2;
        v1 = v2;
        x2 = a + inv_phi * (b - a);
        v2 = value_of_tau(p, x2, opts);
        consider(x2, v2);
      }
    }
  }
  rep.tau_star = best_tau;
  rep.V_star = best_v;
  const double eps = 1e-9;
  rep.boundary = std::abs(best_tau - p.tau_min) < eps || std::abs(best_tau - p.tau_max) < eps;
  return rep;
}

// ---------------------------------------------------------------------------

std::size_t CertaintyEquivalent::find(double time, Side s) const {
  for (std::size_t i = 0; i < t.size(); ++i)
    if (std::abs(t[i] - time) <= 1e-9 && side[i] == s) return i;
  // A node away from tau has a single row serving both sides.
  for (std::size_t i = 0; i < t.size(); ++i)
    if (std::abs(t[i] - time) <= 1e-9) {
      const bool twin = (i + 1 < t.size() && std::abs(t[i + 1] - time) <= 1e-9) ||
                        (i > 0 && std::abs(t[i - 1] - time) <= 1e-9);
      if (!twin) return i;
    }
  return npos;
}

CertaintyEquivalent certainty_equivalent_curves(const DualSolution& dual, const TimeGrid& grid) {
  const ModelParams& p = dual.params;
  const HabitSchedule sched(p, dual.tau);
  const SUtility u = SUtility::from(p);
  auto c_hat_at = [&](double s, Side side) { return u.inverse(s, expected_utility(dual, s, side)); };

  CertaintyEquivalent ce;
  for (double t : grid.nodes()) {
    if (std::abs(t - dual.tau) <= 1e-9 && t > 0.0 && t < p.T) {
      ce.t.push_back(dual.tau);
      ce.side.push_back(Side::left);
      ce.t.push_back(dual.tau);
      ce.side.push_back(Side::right);
    } else {
      ce.t.push_back(t);
      ce.side.push_back(Side::right);
    }
  }
  const std::size_t n = ce.t.size();
  ce.u_bar.resize(n);
  ce.c_hat.resize(n);
  ce.h_hat.resize(n);
  ce.C_hat.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ce.u_bar[i] = expected_utility(dual, ce.t[i], ce.side[i]);
    ce.c_hat[i] = u.inverse(ce.t[i], ce.u_bar[i]);
  }

  // c_hat does not depend on h_hat, so the habit is advanced afterwards with
  // exact decay factors and Gauss-Legendre on each step.
  const numerics::GaussLegendre gl(8);
  ce.h_hat[0] = p.h0;
  for (std::size_t i = 1; i < n; ++i) {
    const double t0 = ce.t[i - 1];
    const double t1 = ce.t[i];
    if (t1 == t0) {
      ce.h_hat[i] = sched.jump() * ce.h_hat[i - 1];
      continue;
    }
    const Side end = ce.side[i];
    const double mid = 0.5 * (t0 + t1);
    const double half = 0.5 * (t1 - t0);
    double inflow = 0.0;
    for (int k = 0; k < gl.order(); ++k) {
      const double s = mid + half * gl.nodes()[k];
      inflow += half * gl.weights()[k] * sched.decay(s, t1, true, end) * sched.psi_at(s) * c_hat_at(s, Side::right);
    }
    ce.h_hat[i] = sched.decay(t0, t1, true, end) * ce.h_hat[i - 1] + inflow;
  }
  for (std::size_t i = 0; i < n; ++i) ce.C_hat[i] = ce.c_hat[i] + ce.h_hat[i];
  return ce;
}

// ---------------------------------------------------------------------------

std::span<const std::string_view> statics_parameters() {
  static constexpr std::array<std::string_view, 9> names{"W0", "alpha", "k", "D", "xi", "psi", "m", "l", "h0"};
  return names;
}

std::string_view to_string(StaticsSign s) {
  switch (s) {
    case StaticsSign::up: return "up";
    case StaticsSign::down: return "down";
    case StaticsSign::zero: return "zero";
    case StaticsSign::boundary: return "boundary";
  }
  return "?";
}

namespace {

double absolute_step(double y, double rel_step) { return y != 0.0 ? rel_step * std::abs(y) : rel_step; }

void check_statics_name(std::string_view name) {
  const auto names = statics_parameters();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw std::invalid_argument("comparative statics: unsupported parameter '" + std::string(name) + "'");
}

struct StaticsPlan {
  ModelParams up;
  double dy = 0.0;
  double dtau = 0.0;
};

StaticsPlan plan_statics(const ModelParams& p, std::string_view name, double rel_step, double dtau, double tau_star) {
  check_statics_name(name);
  StaticsPlan plan;
  plan.up = perturb(p, name, rel_step);
  plan.dy = plan.up.*find_param(name) - p.*find_param(name);
  plan.dtau = tau_star + dtau <= p.tau_max + 1e-12 ? dtau : -dtau;
  return plan;
}

StaticsSign classify(double mixed) {
  if (mixed > 0.0) return StaticsSign::up;
  if (mixed < 0.0) return StaticsSign::down;
  return StaticsSign::zero;
}

}  // namespace

ModelParams perturb(const ModelParams& p, std::string_view name, double rel_step) {
  auto member = find_param(name);
  if (!member) throw std::invalid_argument("perturb: unknown parameter '" + std::string(name) + "'");
  ModelParams q = p;
  q.*member = p.*member + absolute_step(p.*member, rel_step);
  return q;
}

StaticsResult comparative_statics(const ModelParams& p, std::string_view name, double rel_step, double dtau,
                                  double tau_star, const LifecycleOptions& opts) {
  check_statics_name(name);
  StaticsResult res;
  res.parameter = std::string(name);
  bool boundary = false;
  if (tau_star < 0.0) {
    const auto rep = optimize_tau(p, 0.5, opts);
    tau_star = rep.tau_star;
    boundary = rep.boundary;
  } else {
    boundary = std::abs(tau_star - p.tau_min) < 1e-9 || std::abs(tau_star - p.tau_max) < 1e-9;
  }
  res.tau_star = tau_star;
  const auto plan = plan_statics(p, name, rel_step, dtau, tau_star);
  const std::array<std::pair<const ModelParams*, double>, 4> pts{{{&plan.up, tau_star + plan.dtau},
                                                                   {&p, tau_star + plan.dtau},
                                                                   {&plan.up, tau_star},
                                                                   {&p, tau_star}}};
  std::array<double, 4> v{};
  for_each_index(4, opts.parallel, [&](std::size_t i) { v[i] = value_of_tau(*pts[i].first, pts[i].second, opts); });
  res.mixed = (v[0] - v[1] - v[2] + v[3]) / (plan.dy * plan.dtau);
  res.sign = boundary ? StaticsSign::boundary : classify(res.mixed);
  return res;
}

std::vector<StaticsResult> comparative_statics_table(const ModelParams& p, double rel_step, double dtau,
                                                     double grid_step, const LifecycleOptions& opts) {
  const auto rep = optimize_tau(p, grid_step, opts);
  const double ts = rep.tau_star;
  const auto names = statics_parameters();
  std::vector<StaticsPlan> plans;
  for (auto name : names) plans.push_back(plan_statics(p, name, rel_step, dtau, ts));

  // Shared baseline points: V(y, tau*) is V_star; V(y, tau* +- dtau) per direction.
  const std::size_t n = names.size();
  std::vector<double> v_up_shift(n), v_base_shift(n), v_up(n);
  for_each_index(3 * n, opts.parallel, [&](std::size_t task) {
    const std::size_t i = task / 3;
    const auto& plan = plans[i];
    switch (task % 3) {
      case 0: v_up_shift[i] = value_of_tau(plan.up, ts + plan.dtau, opts); break;
      case 1: v_base_shift[i] = value_of_tau(p, ts + plan.dtau, opts); break;
      default: v_up[i] = value_of_tau(plan.up, ts, opts); break;
    }
  });

  std::vector<StaticsResult> out;
  for (std::size_t i = 0; i < n; ++i) {
    StaticsResult r;
    r.parameter = std::string(names[i]);
    r.tau_star = ts;
    r.mixed = (v_up_shift[i] - v_base_shift[i] - v_up[i] + rep.V_star) / (plans[i].dy * plans[i].dtau);
    r.sign = rep.boundary ? StaticsSign::boundary : classify(r.mixed);
    out.push_back(r);
  }
  return out;
}

ModelParams pinned_wealth_params(const ModelParams& p, double tau, double target) {
  const double a = compute_A(p, tau);
  if (!(a > 0.0)) throw std::domain_error("pinned_wealth_params: A(tau) must be positive");
  ModelParams q = p;
  q.W0 *= target / a;
  q.D *= target / a;
  return q;
}

}  // namespace habitret
