#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "habitret/dual.hpp"
#include "habitret/model.hpp"

namespace habitret {

struct LifecycleOptions {
  DualOptions dual;
  numerics::PanelRule value_rule{8, 0.5, 6};
  /// Run tau-grid and statics evaluations with OpenMP.
  bool parallel = true;
};

/// E[u_s(c*_s)] in closed form (includes the e^{-rho s} discount).
double expected_utility(const DualSolution& dual, double s, Side side = Side::right);

struct TauEvaluation {
  double tau = 0.0;
  double V = 0.0;  // -inf when infeasible
  double A = 0.0;
  double nu = 0.0;
  bool feasible = false;
  std::string diagnostic;
};

TauEvaluation evaluate_tau(const ModelParams& p, double tau, const LifecycleOptions& opts = {});

/// V(tau) = int_0^T E[u_s(c*_s)] ds; -inf for an infeasible tau.
double value_of_tau(const ModelParams& p, double tau, const LifecycleOptions& opts = {});

struct LifecycleReport {
  std::vector<double> tau_grid;
  std::vector<double> V_values;
  std::vector<double> A_values;
  double tau_star = 0.0;
  double V_star = 0.0;
  /// tau_star sits on tau_min or tau_max.
  bool boundary = false;
};

/// Grid search over [tau_min, tau_max] (tau_st included as a node), ties to
/// the smaller tau, then one golden-section pass to 0.05 years around the
/// best node.
LifecycleReport optimize_tau(const ModelParams& p, double grid_step = 0.5, const LifecycleOptions& opts = {});

/// Pointwise certainty equivalents. Rows are ordered in time; tau appears
/// twice (left limit, then right limit).
struct CertaintyEquivalent {
  std::vector<double> t;
  std::vector<Side> side;
  std::vector<double> u_bar;   // E[u_t(c*_t)]
  std::vector<double> c_hat;   // u_t^{-1}(u_bar)
  std::vector<double> h_hat;   // habit generated by C_hat
  std::vector<double> C_hat;   // c_hat + h_hat

  /// Row index of (t, side), or npos.
  std::size_t find(double time, Side s = Side::right) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

CertaintyEquivalent certainty_equivalent_curves(const DualSolution& dual, const TimeGrid& grid);

/// Parameters accepted by comparative_statics, in table order.
std::span<const std::string_view> statics_parameters();

enum class StaticsSign { up, down, zero, boundary };
std::string_view to_string(StaticsSign s);

struct StaticsResult {
  std::string parameter;
  double tau_star = 0.0;
  double mixed = 0.0;  // [V(y+dy,t+dt) - V(y,t+dt) - V(y+dy,t) + V(y,t)] / (dy dt)
  StaticsSign sign = StaticsSign::zero;
};

/// Perturbs one field of `p` by a relative step. psi moves alone (eta fixed).
ModelParams perturb(const ModelParams& p, std::string_view name, double rel_step);

/// Mixed difference at (y, tau*). `tau_star` is the optimum for `p`; pass a
/// negative value to have it computed. dtau is flipped to -dtau when
/// tau* + dtau would leave the window.
StaticsResult comparative_statics(const ModelParams& p, std::string_view name, double rel_step = 0.01,
                                  double dtau = 1.0, double tau_star = -1.0, const LifecycleOptions& opts = {});

/// All statics_parameters() with one shared optimisation of tau*.
std::vector<StaticsResult> comparative_statics_table(const ModelParams& p, double rel_step = 0.01, double dtau = 1.0,
                                                     double grid_step = 0.5, const LifecycleOptions& opts = {});

/// Rescales W0 and D jointly so that A(tau) equals `target` (isolates the
/// habitual effect of tau).
ModelParams pinned_wealth_params(const ModelParams& p, double tau, double target = 500.0);

}  // namespace habitret
