#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "habitret/numerics.hpp"

namespace habitret {

/// Which one-sided limit to take at a schedule breakpoint. Schedules are
/// right-continuous, so `right` is the value *at* the breakpoint.
enum class Side { left, right };

/// Market, wage, pension, habit and preference calibration. Times in years,
/// rates per year, money in currency units per year.
struct ModelParams {
  // market
  double r = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  // wage and pension
  double alpha = 0.0;
  double beta = 0.0;
  double W0 = 0.0;
  double k = 0.0;
  double D = 0.0;
  double xi = 0.0;
  double zeta = 0.0;
  double tau_st = 0.0;
  // horizon
  double T = 0.0;
  double tau_min = 0.0;
  double tau_max = 0.0;
  // habit
  double psi = 0.0;
  double eta = 0.0;
  double l = 1.0;
  double m = 1.0;
  double h0 = 0.0;
  double L = 0.0;
  // preferences
  double rho = 0.0;
  double gamma = 0.5;
  double kappa = 1.0;

  /// Market price of risk (mu - r) / sigma.
  double theta() const { return (mu - r) / sigma; }

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;

  /// Early-retirement penalty g(tau) = exp(-zeta (tau_st - tau)^+).
  double benefit_penalty(double tau) const;

  /// Drift of E[H_s W_s] while the wage is stochastic: alpha - r - theta*beta.
  double wage_discount_growth() const { return alpha - r - theta() * beta; }
};

/// Field table shared by the config loader, the manifest and the statics
/// parameter lookup.
struct ParamField {
  std::string_view name;
  double ModelParams::*member;
};
std::span<const ParamField> param_fields();

/// Pointer-to-member for a named field, or nullptr.
double ModelParams::*find_param(std::string_view name);

/// The calibration used throughout the numerical study (ages 25 to 100).
ModelParams baseline_params();

/// Named preset lookup; currently only "baseline".
ModelParams preset_params(std::string_view name);

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Parses `key = value` lines (`#` starts a comment). With `base == nullptr`
/// every field except h0 and L must be present (those two fall back to the
/// baseline values). With a base, the file only overrides. Unknown keys and
/// malformed numbers throw ConfigError.
ModelParams parse_params(std::istream& in, const ModelParams* base = nullptr);
ModelParams load_params_file(const std::string& path, const ModelParams* base = nullptr);

/// Piecewise-constant habit coefficients around a retirement time tau:
/// psi(t) = psi, eta~(t) = eta before tau and m*psi, m*eta from tau on, plus
/// the multiplicative habit jump l at tau (the Dirac part of eta).
class HabitSchedule {
public:
  HabitSchedule(const ModelParams& p, double tau);

  double tau() const { return tau_; }
  double jump() const { return l_; }
  double psi_at(double t, Side side = Side::right) const;
  double eta_smooth_at(double t, Side side = Side::right) const;

  /// exp(-int_s^t eta(u) du), or exp(-int_s^t (eta - psi)(u) du) when
  /// `net_of_inflow`; in both cases times l iff s < tau <= t. With
  /// side == left and t == tau the jump is not yet applied.
  double decay(double s, double t, bool net_of_inflow, Side side = Side::right) const;

  /// Smooth-part decay rate before / after tau.
  double rate_pre(bool net_of_inflow) const { return net_of_inflow ? eta_ - psi_ : eta_; }
  double rate_post(bool net_of_inflow) const { return m_ * rate_pre(net_of_inflow); }

private:
  double tau_;
  double psi_;
  double eta_;
  double l_;
  double m_;
};

/// Free-function form of HabitSchedule::decay.
double habit_decay_factor(const HabitSchedule& schedule, double s, double t, bool net_of_inflow);

/// Ordered time nodes on [0, T] that always contain the declared breakpoints.
class TimeGrid {
public:
  /// Uniform step `step` (the last step per segment may be shorter);
  /// breakpoints are inserted as nodes.
  static TimeGrid with_step(double T, double step, std::span<const double> breakpoints);
  /// Takes nodes as given; throws unless strictly increasing from 0.
  static TimeGrid from_nodes(std::vector<double> nodes);

  std::span<const double> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  double operator[](std::size_t i) const { return nodes_[i]; }
  double back() const { return nodes_.back(); }
  /// Index of a node equal to t (within 1e-9), or npos.
  std::size_t find(double t) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
  std::vector<double> nodes_;
};

/// Standard breakpoints {0, tau_min, tau, tau_st, T}.
std::vector<double> standard_breakpoints(const ModelParams& p, double tau);

/// Habit level at t driven by excess consumption c: solves
/// dh = [psi c - (eta - psi) h] dt with h(tau) = l h(tau-), i.e.
/// h_t = D(0,t) h0 + int_0^t D(s,t) psi(s) c(s) ds, D net of inflow.
double propagate_habit(const HabitSchedule& schedule, double h0, const std::function<double(double)>& excess,
                       double t, const numerics::PanelRule& rule = {},
                       std::span<const double> extra_breakpoints = {}, Side side = Side::right);

/// Habit level at t driven by actual consumption C (unified Dirac form):
/// h_t = h0 e^{-int_0^t eta} + int_0^t e^{-int_s^t eta} psi(s) C(s) ds.
double habit_from_consumption(const HabitSchedule& schedule, double h0,
                              const std::function<double(double)>& consumption, double t,
                              const numerics::PanelRule& rule = {},
                              std::span<const double> extra_breakpoints = {}, Side side = Side::right);

}  // namespace habitret
