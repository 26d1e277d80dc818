#pragma once

#include <string_view>
#include <vector>

#include "habitret/model.hpp"
#include "habitret/numerics.hpp"

namespace habitret {

/// ln X ~ Normal(mean_log, var_log).
struct LognormalLaw {
  double mean_log = 0.0;
  double var_log = 0.0;

  /// Law of H_s given H_t = exp(log_Ht): drift -(r + theta^2/2), variance theta^2.
  static LognormalLaw state_price(const ModelParams& p, double t, double s, double log_Ht = 0.0);
};

enum class Tail { below, above };

/// E[X^a 1{X < c}] (below) or E[X^a 1{X >= c}] (above). Accepts c = +inf
/// and c = 0 for the degenerate thresholds. A variance under 1e-12 is
/// treated as a point mass.
double partial_power_moment(const LognormalLaw& law, double a, double c, Tail tail);

/// Adjusted-density factor: Gamma_t = H_t (1 + F_t),
/// F_t = psi(t) int_t^T D(t,s) e^{-r(s-t)} ds, D net of inflow with the jump.
double compute_F(const ModelParams& p, double tau, double t, Side side = Side::right);

/// Risk-neutral present value of net wages and pension benefits at time 0.
double compute_A(const ModelParams& p, double tau);

/// z = int_0^T e^{-int_0^s eta} e^{-rs} (1 + F_s) ds by panel quadrature.
double compute_z(const ModelParams& p, double tau, const numerics::PanelRule& rule = {});

/// The same constant through the net-of-inflow kernel, closed form:
/// z = int_0^T D(0,s) e^{-rs} ds. Used as the second route for z.
double compute_z_closed(const ModelParams& p, double tau);

/// Wage annuity factor: E_t[int_t^T H_s W_s 1{s <= tau} ds] = H_t W_t O_t.
double compute_O(const ModelParams& p, double tau, double t);

/// Weight of future excess consumption in the wealth functional:
/// N_s = 1 + psi(s) int_s^T D(s,u) e^{-r(u-s)} du (equals 1 + F_s).
double compute_N(const ModelParams& p, double tau, double s, Side side = Side::right);

/// int_t^T D(0,s) e^{-r(s-t)} ds: present value at t of a unit habit level
/// carried forward with no further inflow.
double habit_annuity(const ModelParams& p, double tau, double t);

/// int_t^T g(tau) D e^{xi s} e^{-r(s-t)} 1{s > tau} ds.
double benefit_annuity(const ModelParams& p, double tau, double t);

enum class CurveKind { F, N, O, discount, benefit };
std::string_view curve_name(CurveKind kind);

/// A deterministic function of time sampled on a grid. Values at nodes come
/// from the closed forms.
struct DeterministicCurve {
  TimeGrid grid;
  std::vector<double> values;
  CurveKind kind = CurveKind::F;
};

/// `discount` is e^{-rt}; `benefit` is the benefit annuity at t.
DeterministicCurve tabulate(CurveKind kind, const ModelParams& p, double tau, const TimeGrid& grid);

}  // namespace habitret
