#include "habitret/dual.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace habitret {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class F>
std::pair<double, double> toms748(F&& f, double lo, double hi, double f_lo, double f_hi, int max_iter,
                                  int& used) {
  auto iters = static_cast<std::uintmax_t>(max_iter);
  const auto r =
      boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(52), iters);
  used = static_cast<int>(iters);
  return r;
}

}  // namespace

double SUtility::operator()(double x) const {
  if (x < -L) throw std::domain_error("SUtility: x below -L");
  const double p = 1.0 - gamma;
  if (x >= 0.0) return std::pow(x, p) / p;
  return -kappa * std::pow(-x, p) / p;
}

double SUtility::discounted(double s, double x) const { return std::exp(-rho * s) * (*this)(x); }

double SUtility::marginal(double s, double x) const {
  const double scale = x >= 0.0 ? 1.0 : kappa;
  return std::exp(-rho * s) * scale * std::pow(std::abs(x), -gamma);
}

double SUtility::inverse(double s, double utility) const {
  const double p = 1.0 - gamma;
  const double v = utility * std::exp(rho * s);
  if (v >= 0.0) return std::pow(p * v, 1.0 / p);
  const double x = -std::pow(-p * v / kappa, 1.0 / p);
  return std::max(x, -L);
}

double Tangency::threshold(double rho, double s) const {
  if (degenerate) return kInf;
  return std::exp(-rho * s) * q_star;
}

Tangency solve_tangency(const SUtility& u) {
  if (!(u.gamma > 0.0 && u.gamma < 1.0) || u.kappa < 1.0 || u.L < 0.0)
    throw std::domain_error("solve_tangency: requires 0 < gamma < 1, kappa >= 1, L >= 0");
  if (u.L == 0.0) return {kInf, true};
  const double g = u.gamma;
  const double p = 1.0 - g;
  const double loss = u.kappa * std::pow(u.L, p) / p;
  // Tangency residual after collecting the q^{-(1-g)/g} terms; strictly decreasing in q.
  auto residual = [&](double log_q) {
    const double q = std::exp(log_q);
    return std::exp(-p / g * log_q) * g / p + loss - q * u.L;
  };

  // Single sign change on a log grid.
  int changes = 0;
  double prev = residual(std::log(1e-12));
  for (int i = 1; i <= 240; ++i) {
    const double cur = residual(std::log(1e-12) + i * (std::log(1e12) - std::log(1e-12)) / 240.0);
    if ((prev > 0.0) != (cur > 0.0)) ++changes;
    prev = cur;
  }
  if (changes != 1) throw std::runtime_error("solve_tangency: expected exactly one root");

  double lo = std::log(1e-12);
  double hi = std::log(1e12);
  int used = 0;
  const auto [a, b] = toms748(residual, lo, hi, residual(lo), residual(hi), 200, used);
  return {std::exp(0.5 * (a + b)), false};
}

double dual_map(const SUtility& u, const Tangency& tan, double s, double y) {
  if (!(y > 0.0)) throw std::domain_error("dual_map: y must be positive");
  if (y >= tan.threshold(u.rho, s)) return -u.L;
  return std::pow(y * std::exp(u.rho * s), -1.0 / u.gamma);
}

double dual_value(const SUtility& u, const Tangency& tan, double s, double y) {
  const double x = dual_map(u, tan, s, y);
  return u.discounted(s, x) - x * y;
}

// ---------------------------------------------------------------------------

BudgetKernel::BudgetKernel(const ModelParams& p, double tau, const numerics::PanelRule& rule)
    : u_(SUtility::from(p)), tangency_(solve_tangency(u_)) {
  const double cuts[] = {tau};
  const auto pts = numerics::composite_points(0.0, p.T, cuts, rule);
  nodes_.reserve(pts.size());
  double floor_acc = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double s = pts.nodes[i];
    const double w = pts.weights[i];
    const double opf = 1.0 + compute_F(p, tau, s);
    nodes_.push_back({s, w, opf, tangency_.threshold(p.rho, s), p.rho * s, LognormalLaw::state_price(p, 0.0, s)});
    floor_acc += w * opf * std::exp(-p.r * s);
  }
  floor_ = -p.L * floor_acc;
}

double BudgetKernel::operator()(double x) const {
  if (!(x > 0.0)) throw std::domain_error("budget_gap: x must be positive");
  const double a1 = 1.0 - 1.0 / u_.gamma;
  double acc = 0.0;
  for (const auto& n : nodes_) {
    const double y_scale = x * n.one_plus_F;
    const double c = n.y0 / y_scale;
    const double k = std::exp(-(std::log(y_scale) + n.rho_s) / u_.gamma);
    double term = k * partial_power_moment(n.law, a1, c, Tail::below);
    if (u_.L > 0.0) term -= u_.L * partial_power_moment(n.law, 1.0, c, Tail::above);
    acc += n.weight * n.one_plus_F * term;
  }
  return acc;
}

double budget_gap(const ModelParams& p, double tau, double x, const numerics::PanelRule& rule) {
  return BudgetKernel(p, tau, rule)(x);
}

// ---------------------------------------------------------------------------

double DualSolution::threshold_H(double s, Side side) const {
  if (nu_infinite) return 0.0;
  return y0(s) / (nu * (1.0 + compute_F(params, tau, s, side)));
}

double DualSolution::consumption_scale(double s, Side side) const {
  if (nu_infinite) return 0.0;
  const double y = nu * (1.0 + compute_F(params, tau, s, side));
  return std::exp(-(std::log(y) + params.rho * s) / params.gamma);
}

DualSolution solve_nu(const ModelParams& p, double tau, const DualOptions& opts) {
  p.validate();
  if (tau < p.tau_min || tau > p.tau_max) throw std::domain_error("solve_nu: tau outside the retirement window");

  DualSolution sol;
  sol.params = p;
  sol.tau = tau;
  sol.A = compute_A(p, tau);
  sol.z = compute_z(p, tau, opts.rule);
  sol.budget = sol.A - p.h0 * sol.z;
  const auto grid = TimeGrid::with_step(p.T, 0.5, standard_breakpoints(p, tau));
  sol.F_curve = tabulate(CurveKind::F, p, tau, grid);

  const BudgetKernel f(p, tau, opts.rule);
  sol.tangency = f.tangency();
  sol.floor_budget = f.floor();

  const double scale = std::max(1.0, std::abs(sol.budget));
  if (sol.budget < sol.floor_budget - 1e-12 * scale) {
    throw InfeasibleError("infeasible: income cannot support minimal consumption (A - h0 z = " +
                          std::to_string(sol.budget) + " < " + std::to_string(sol.floor_budget) + ")");
  }
  if (std::abs(sol.budget - sol.floor_budget) <= 1e-12 * scale) {
    sol.nu = kInf;
    sol.nu_infinite = true;
    return sol;
  }

  auto g = [&](double log_x) { return f(std::exp(log_x)) - sol.budget; };
  const double step = std::log(10.0);
  double lo = std::log(1e-8);
  double hi = std::log(1e8);
  double g_lo = g(lo);
  double g_hi = g(hi);
  int expansions = 0;
  while (g_lo <= 0.0 && expansions++ < 60) {
    lo -= step;
    g_lo = g(lo);
  }
  while (g_hi >= 0.0 && expansions++ < 120) {
    hi += step;
    g_hi = g(hi);
  }
  if (!(g_lo > 0.0 && g_hi < 0.0)) throw std::runtime_error("solve_nu: could not bracket the multiplier");

  int used = 0;
  const auto [a, b] = toms748(g, lo, hi, g_lo, g_hi, opts.max_iter, used);
  const double ra = std::abs(g(a));
  const double rb = std::abs(g(b));
  const double root = ra <= rb ? a : b;
  sol.nu = std::exp(root);
  sol.residual = std::min(ra, rb);
  sol.iterations = used;
  if (sol.residual > opts.rel_tol * scale)
    throw std::runtime_error("solve_nu: residual " + std::to_string(sol.residual) + " above tolerance");
  return sol;
}

}  // namespace habitret
