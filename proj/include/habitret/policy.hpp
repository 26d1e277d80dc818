#pragma once

#include <vector>

#include "habitret/dual.hpp"
#include "habitret/model.hpp"
#include "habitret/numerics.hpp"

namespace habitret {

struct PolicyOptions {
  /// Rule for the future-consumption integral over [t, T]; graded toward t
  /// where the integrand has a 1/sqrt(u - t) layer.
  numerics::PanelRule kernel_rule{8, 2.5, 12};
};

/// f_t and its first two derivatives in x = ln H_t.
struct KernelValue {
  double f = 0.0;
  double f_x = 0.0;
  double f_xx = 0.0;
};

/// f_t(H) = E_t[int_t^T (H_u/H_t)(1+F_u) c*_u du] for one fixed t, with the
/// per-node coefficients cached so that evaluations at many H are cheap.
class FutureKernel {
public:
  FutureKernel(const DualSolution& dual, double t, const numerics::PanelRule& rule);

  double t() const { return t_; }
  KernelValue operator()(double log_H) const;
  double value(double log_H) const;

private:
  struct Node {
    double k1;      // weight * (1+F_u) * K_u * exp(a1 m + a1^2 v / 2)
    double k2;      // weight * (1+F_u) * L * exp(-r (u - t))
    double shift;   // ln b_u - m_u; d_a = (shift - x - a1 v)/s
    double var;
    double sd;
  };
  double t_;
  double inv_gamma_;
  double a1_;
  std::vector<Node> nodes_;
};

/// Pathwise optimal policies as functions of (t, H_t) plus two scalars of
/// path state: the wage W_t and J_t = int_0^t psi(u) c*_u / D(0,u) du, so that
/// h_t = D(0,t) (h0 + J_t).
class PolicyEvaluator {
public:
  explicit PolicyEvaluator(DualSolution dual, const PolicyOptions& opts = {});

  const DualSolution& dual() const { return dual_; }
  const ModelParams& params() const { return dual_.params; }
  const HabitSchedule& schedule() const { return schedule_; }
  double tau() const { return dual_.tau; }

  /// c*_t = Y_t(nu (1+F_t) H_t).
  double excess_consumption(double t, double H, Side side = Side::right) const;
  /// psi(t) / D(0,t): integrand weight of J.
  double inflow_weight(double t, Side side = Side::right) const;
  double habit(double t, double J, Side side = Side::right) const;
  double consumption_level(double t, double H, double J, Side side = Side::right) const;

  FutureKernel future_kernel(double t) const { return {dual_, t, opts_.kernel_rule}; }
  KernelValue future(double t, double H) const;

  /// Everything in X*_t except f_t: (h0+J) Q_t - (1-k) W O_t - benefit annuity.
  double wealth_offset(double t, double J, double W) const;
  double wealth(double t, double H, double J, double W) const;

  double income(double t, double W) const;
  /// (1-k) beta W O_t while the wage is stochastic (t < tau_min), else 0.
  double wage_hedge(double t, double W) const;
  /// pi*_t = (-theta f_x - wage hedge) / sigma.
  double portfolio(double t, double f_x, double W) const;
  double portfolio_at(double t, double H, double W) const;
  /// d(sigma pi*)/dB, the derivative of the wealth diffusion along the driver.
  double diffusion_sensitivity(double t, double f_xx, double W) const;

  /// E[pi*_t]; `side` selects the limit of the wage-hedge indicator at tau_min.
  double expected_portfolio(double t, Side side = Side::right) const;

private:
  DualSolution dual_;
  HabitSchedule schedule_;
  SUtility u_;
  PolicyOptions opts_;
};

struct LowerBounds {
  double C = 0.0;
  double X = 0.0;
};

/// Minimal consumption (habit fed by c = -L, minus L) and the wealth needed
/// to finance it net of pension benefits.
LowerBounds lower_bounds(const ModelParams& p, double tau, double t);

}  // namespace habitret
