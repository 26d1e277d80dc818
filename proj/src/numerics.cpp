#include "habitret/numerics.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace habitret::numerics {

namespace {

// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

GaussLegendre::GaussLegendre(int order) {
  if (order < 1) throw std::invalid_argument("GaussLegendre: order must be positive");
  const int n = order;
  nodes_.assign(n, 0.0);
  weights_.assign(n, 0.0);
  if (n == 1) {
    weights_[0] = 2.0;
    return;
  }
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes_[i] = -x;
    nodes_[n - 1 - i] = x;
    weights_[i] = w;
    weights_[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes_[n / 2] = 0.0;
}

QuadraturePoints composite_points(double a, double b, std::span<const double> breakpoints,
                                  const PanelRule& rule) {
  QuadraturePoints out;
  if (!(b > a)) return out;
  if (!(rule.max_panel > 0.0)) throw std::invalid_argument("composite_points: max_panel must be positive");

  std::vector<double> cuts{a, b};
  for (double x : breakpoints)
    if (x > a && x < b) cuts.push_back(x);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  // Geometric grading toward a inside the first segment.
  std::vector<double> edges{a};
  double seg_end = cuts[1];
  if (rule.graded_levels > 0) {
    const double first = std::min(rule.max_panel, seg_end - a);
    double w = first * std::ldexp(1.0, -rule.graded_levels);
    double x = a;
    for (int lvl = 0; lvl < rule.graded_levels; ++lvl) {
      x = a + w;
      edges.push_back(x);
      w *= 2.0;
    }
  }
  for (std::size_t c = 1; c < cuts.size(); ++c) {
    const double lo = edges.back();
    const double hi = cuts[c];
    if (hi <= lo) continue;
    const auto n = static_cast<int>(std::ceil((hi - lo) / rule.max_panel - 1e-12));
    const int panels = std::max(1, n);
    for (int p = 1; p < panels; ++p) edges.push_back(lo + (hi - lo) * p / panels);
    edges.push_back(hi);
  }

  const GaussLegendre gl(rule.order);
  out.nodes.reserve((edges.size() - 1) * gl.order());
  out.weights.reserve(out.nodes.capacity());
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double mid = 0.5 * (edges[e] + edges[e + 1]);
    const double half = 0.5 * (edges[e + 1] - edges[e]);
    for (int k = 0; k < gl.order(); ++k) {
      out.nodes.push_back(mid + half * gl.nodes()[k]);
      out.weights.push_back(half * gl.weights()[k]);
    }
  }
  return out;
}

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n <= 8) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t mid = n / 2;
  return pairwise_sum(values.first(mid)) + pairwise_sum(values.subspan(mid));
}

double exp_integral(double rate, double length) {
  if (std::abs(rate) < 1e-12) return length * (1.0 - 0.5 * rate * length);
  return -std::expm1(-rate * length) / rate;
}

}  // namespace habitret::numerics
