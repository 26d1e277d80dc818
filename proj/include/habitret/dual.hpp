#pragma once

#include <stdexcept>
#include <vector>

#include "habitret/analytics.hpp"
#include "habitret/model.hpp"
#include "habitret/numerics.hpp"

namespace habitret {

/// S-shaped utility of excess consumption x >= -L:
/// x^{1-g}/(1-g) for x >= 0 and -kappa (-x)^{1-g}/(1-g) below zero.
struct SUtility {
  double rho = 0.0;
  double gamma = 0.5;
  double kappa = 1.0;
  double L = 0.0;

  static SUtility from(const ModelParams& p) { return {p.rho, p.gamma, p.kappa, p.L}; }

  double operator()(double x) const;
  /// e^{-rho s} u(x).
  double discounted(double s, double x) const;
  /// d/dx of e^{-rho s} u(x), for x != 0.
  double marginal(double s, double x) const;
  /// Inverse of x -> e^{-rho s} u(x) on [-L, inf); values below u_s(-L) clamp to -L.
  double inverse(double s, double utility) const;
};

/// Concavification tangency. The tangent from (-L, u(-L)) touches the gain
/// branch where the dual variable equals y0(s) = e^{-rho s} q_star. With
/// L = 0 there is no tangent: q_star is +inf and `degenerate` is set.
struct Tangency {
  double q_star = 0.0;
  bool degenerate = false;

  double threshold(double rho, double s) const;
};

/// Solves q^{-(1-g)/g}/(1-g) + kappa L^{1-g}/(1-g) = q (q^{-1/g} + L).
Tangency solve_tangency(const SUtility& u);

/// argmax_{x >= -L} { u_s(x) - x y }: -L for y >= y0(s), else (y e^{rho s})^{-1/g}.
double dual_map(const SUtility& u, const Tangency& tan, double s, double y);

/// max_{x >= -L} { u_s(x) - x y }.
double dual_value(const SUtility& u, const Tangency& tan, double s, double y);

class InfeasibleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct DualOptions {
  numerics::PanelRule rule{8, 0.5, 6};
  double rel_tol = 1e-8;
  int max_iter = 200;
};

/// Budget map f(x) = int_0^T (1+F_s) E[Y_s(x (1+F_s) H_s) H_s] ds for a
/// fixed tau, with the per-node deterministic data cached.
class BudgetKernel {
public:
  BudgetKernel(const ModelParams& p, double tau, const numerics::PanelRule& rule);

  double operator()(double x) const;
  /// f(+inf) = -L int_0^T (1+F_s) e^{-rs} ds.
  double floor() const { return floor_; }
  const Tangency& tangency() const { return tangency_; }

private:
  struct Node {
    double s, weight, one_plus_F, y0, rho_s;
    LognormalLaw law;
  };
  SUtility u_;
  Tangency tangency_;
  std::vector<Node> nodes_;
  double floor_ = 0.0;
};

double budget_gap(const ModelParams& p, double tau, double x, const numerics::PanelRule& rule = DualOptions{}.rule);

/// Multiplier nu and the constants it was matched against, for one tau.
struct DualSolution {
  ModelParams params;
  double tau = 0.0;
  double nu = 0.0;
  bool nu_infinite = false;
  Tangency tangency;
  double A = 0.0;
  double z = 0.0;
  double budget = 0.0;        // A - h0 z
  double floor_budget = 0.0;  // f(inf)
  double residual = 0.0;      // |f(nu) - budget|
  int iterations = 0;
  DeterministicCurve F_curve;

  double y0(double s) const { return tangency.threshold(params.rho, s); }
  /// H-level above which excess consumption sits at -L.
  double threshold_H(double s, Side side = Side::right) const;
  /// (nu (1+F_s) e^{rho s})^{-1/gamma}: c*_s = scale * H^{-1/gamma} below threshold.
  double consumption_scale(double s, Side side = Side::right) const;
};

/// Solves f(nu) = A - h0 z. Throws InfeasibleError when A - h0 z < f(inf).
DualSolution solve_nu(const ModelParams& p, double tau, const DualOptions& opts = {});

}  // namespace habitret
