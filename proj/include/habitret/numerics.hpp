#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace habitret::numerics {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

/// Standard normal CDF via erfc. No cancellation in either tail; the relative
/// error grows like x^2 ulp from rounding the argument.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

inline double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

/// Gauss-Legendre nodes and weights on [-1, 1].
class GaussLegendre {
public:
  explicit GaussLegendre(int order);

  int order() const { return static_cast<int>(nodes_.size()); }
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }

private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Composite rule settings. Panels never straddle a breakpoint; the first
/// `graded_levels` panels after the start are geometrically refined toward it
/// (for integrands with a sqrt-type boundary layer at the lower limit).
struct PanelRule {
  int order = 8;
  double max_panel = 0.5;
  int graded_levels = 0;
};

/// Flattened quadrature: abscissae and weights for a whole interval.
struct QuadraturePoints {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Builds composite Gauss-Legendre points on [a, b]. Breakpoints outside
/// (a, b) are ignored.
QuadraturePoints composite_points(double a, double b, std::span<const double> breakpoints,
                                  const PanelRule& rule);

template <class F>
double integrate(const QuadraturePoints& q, F&& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) acc += q.weights[i] * f(q.nodes[i]);
  return acc;
}

/// Pairwise (cascade) summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> values);

/// (1 - exp(-rate * length)) / rate, with the rate -> 0 limit handled.
double exp_integral(double rate, double length);

}  // namespace habitret::numerics
