#include "habitret/policy.hpp"

#include <cmath>
#include <limits>

#include "habitret/analytics.hpp"

namespace habitret {

using numerics::normal_cdf;
using numerics::normal_pdf;

FutureKernel::FutureKernel(const DualSolution& dual, double t, const numerics::PanelRule& rule)
    : t_(t), inv_gamma_(1.0 / dual.params.gamma), a1_(1.0 - inv_gamma_) {
  const ModelParams& p = dual.params;
  if (t < 0.0 || t > p.T) throw std::domain_error("FutureKernel: t outside [0, T]");
  const double th = p.theta();
  const double cuts[] = {dual.tau};
  const auto pts = numerics::composite_points(t, p.T, cuts, rule);
  nodes_.reserve(pts.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double u = pts.nodes[i];
    const double w = pts.weights[i];
    const double opf = 1.0 + compute_F(p, dual.tau, u);
    const double mean = -(p.r + 0.5 * th * th) * (u - t);
    const double var = th * th * (u - t);
    Node n{};
    n.var = var;
    n.sd = std::sqrt(var);
    n.k2 = w * opf * p.L * std::exp(-p.r * (u - t));
    if (dual.nu_infinite) {
      n.k1 = 0.0;
      n.shift = -inf;
    } else {
      n.k1 = w * opf * dual.consumption_scale(u) * std::exp(a1_ * mean + 0.5 * a1_ * a1_ * var);
      const double log_b = dual.tangency.degenerate ? inf : std::log(dual.y0(u) / (dual.nu * opf));
      n.shift = log_b - mean;
    }
    nodes_.push_back(n);
  }
}

KernelValue FutureKernel::operator()(double x) const {
  const double ig = inv_gamma_;
  double sf = 0.0, sfx = 0.0, sfxx = 0.0;
  double gf = 0.0, gfx = 0.0, gfxx = 0.0;
  for (const auto& n : nodes_) {
    if (n.shift == std::numeric_limits<double>::infinity()) {
      sf += n.k1;
      sfx -= n.k1 * ig;
      sfxx += n.k1 * ig * ig;
      continue;
    }
    if (n.shift == -std::numeric_limits<double>::infinity()) {
      gf += n.k2;
      continue;
    }
    if (n.sd <= 0.0) {
      const bool below = x < n.shift;
      const double pa = below ? 1.0 : 0.0;
      sf += n.k1 * pa;
      sfx -= n.k1 * pa * ig;
      sfxx += n.k1 * pa * ig * ig;
      gf += below ? 0.0 : n.k2;
      continue;
    }
    const double da = (n.shift - x - a1_ * n.var) / n.sd;
    const double d1 = (n.shift - x - n.var) / n.sd;
    const double Pa = normal_cdf(da);
    const double pa = normal_pdf(da);
    const double p1 = normal_pdf(d1);
    sf += n.k1 * Pa;
    sfx += n.k1 * (-Pa * ig - pa / n.sd);
    sfxx += n.k1 * (Pa * ig * ig + 2.0 * pa * ig / n.sd - da * pa / n.var);
    gf += n.k2 * normal_cdf(-d1);
    gfx += n.k2 * p1 / n.sd;
    gfxx += n.k2 * d1 * p1 / n.var;
  }
  const double e = std::exp(-x * ig);
  return {e * sf - gf, e * sfx - gfx, e * sfxx - gfxx};
}

double FutureKernel::value(double x) const { return (*this)(x).f; }

// ---------------------------------------------------------------------------

PolicyEvaluator::PolicyEvaluator(DualSolution dual, const PolicyOptions& opts)
    : dual_(std::move(dual)), schedule_(dual_.params, dual_.tau), u_(SUtility::from(dual_.params)), opts_(opts) {}

double PolicyEvaluator::excess_consumption(double t, double H, Side side) const {
  if (!(H > 0.0)) throw std::domain_error("excess_consumption: H must be positive");
  if (dual_.nu_infinite) return -params().L;
  const double y = dual_.nu * (1.0 + compute_F(params(), tau(), t, side)) * H;
  return dual_map(u_, dual_.tangency, t, y);
}

double PolicyEvaluator::inflow_weight(double t, Side side) const {
  return schedule_.psi_at(t, side) / schedule_.decay(0.0, t, true, side);
}

double PolicyEvaluator::habit(double t, double J, Side side) const {
  return schedule_.decay(0.0, t, true, side) * (params().h0 + J);
}

double PolicyEvaluator::consumption_level(double t, double H, double J, Side side) const {
  return excess_consumption(t, H, side) + habit(t, J, side);
}

KernelValue PolicyEvaluator::future(double t, double H) const { return future_kernel(t)(std::log(H)); }

double PolicyEvaluator::wealth_offset(double t, double J, double W) const {
  const ModelParams& p = params();
  return (p.h0 + J) * habit_annuity(p, tau(), t) - (1.0 - p.k) * W * compute_O(p, tau(), t) -
         benefit_annuity(p, tau(), t);
}

double PolicyEvaluator::wealth(double t, double H, double J, double W) const {
  return wealth_offset(t, J, W) + future(t, H).f;
}

double PolicyEvaluator::income(double t, double W) const {
  const ModelParams& p = params();
  if (t < tau()) return (1.0 - p.k) * W;
  return p.benefit_penalty(tau()) * p.D * std::exp(p.xi * t);
}

double PolicyEvaluator::wage_hedge(double t, double W) const {
  const ModelParams& p = params();
  if (!(t < p.tau_min)) return 0.0;
  return (1.0 - p.k) * p.beta * W * compute_O(p, tau(), t);
}

double PolicyEvaluator::portfolio(double t, double f_x, double W) const {
  const ModelParams& p = params();
  return (-p.theta() * f_x - wage_hedge(t, W)) / p.sigma;
}

double PolicyEvaluator::portfolio_at(double t, double H, double W) const {
  return portfolio(t, future(t, H).f_x, W);
}

double PolicyEvaluator::diffusion_sensitivity(double t, double f_xx, double W) const {
  const ModelParams& p = params();
  const double th = p.theta();
  return th * th * f_xx - p.beta * wage_hedge(t, W);
}

double PolicyEvaluator::expected_portfolio(double t, Side side) const {
  const ModelParams& p = params();
  const double th = p.theta();
  const FutureKernel kern = future_kernel(t);
  const double mean = -(p.r + 0.5 * th * th) * t;
  const double sd = std::abs(th) * std::sqrt(t);
  double e_fx = 0.0;
  if (sd == 0.0) {
    e_fx = kern(mean).f_x;
  } else {
    const auto pts = numerics::composite_points(-8.5, 8.5, {}, {8, 0.5, 0});
    e_fx = numerics::integrate(pts, [&](double z) { return normal_pdf(z) * kern(mean + sd * z).f_x; });
  }
  const double mean_W = p.W0 * std::exp(p.alpha * std::min(t, p.tau_min));
  const bool hedged = t < p.tau_min || (t == p.tau_min && side == Side::left);
  const double hedge = hedged ? (1.0 - p.k) * p.beta * mean_W * compute_O(p, tau(), t) : 0.0;
  return (-th * e_fx - hedge) / p.sigma;
}

// ---------------------------------------------------------------------------

namespace {

// int_0^t D(s,t) psi(s) ds for the net-of-inflow kernel.
double habit_inflow_weight(const ModelParams& p, double tau, double t) {
  using numerics::exp_integral;
  const double a = p.eta - p.psi;
  if (t < tau) return p.psi * exp_integral(a, t);
  return p.l * std::exp(-p.m * a * (t - tau)) * p.psi * exp_integral(a, tau) + p.m * p.psi * exp_integral(p.m * a, t - tau);
}

double min_consumption(const ModelParams& p, const HabitSchedule& sched, double t) {
  return sched.decay(0.0, t, true) * p.h0 - p.L * habit_inflow_weight(p, sched.tau(), t) - p.L;
}

}  // namespace

LowerBounds lower_bounds(const ModelParams& p, double tau, double t) {
  if (t < 0.0 || t > p.T) throw std::domain_error("lower_bounds: t outside [0, T]");
  const HabitSchedule sched(p, tau);
  const double cuts[] = {tau};
  const auto pts = numerics::composite_points(t, p.T, cuts, {12, 1.0, 0});
  const double pv = numerics::integrate(pts, [&](double s) { return std::exp(-p.r * (s - t)) * min_consumption(p, sched, s); });
  return {min_consumption(p, sched, t), pv - benefit_annuity(p, tau, t)};
}

}  // namespace habitret
