#include <cmath>
#include <numeric>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "doctest.h"
#include "habitret/numerics.hpp"
#include "oracles.hpp"

using namespace habitret::numerics;

TEST_CASE("gauss-legendre is exact for degree 2n-1") {
  for (int n : {2, 4, 8, 16}) {
    GaussLegendre gl(n);
    double wsum = 0.0;
    for (double w : gl.weights()) wsum += w;
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      double q = 0.0;
      for (int i = 0; i < n; ++i) q += gl.weights()[i] * std::pow(gl.nodes()[i], deg);
      const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
      CHECK(std::abs(q - exact) < 1e-14);
    }
  }
}

TEST_CASE("composite rule never straddles a breakpoint") {
  const std::vector<double> bp{0.3, 1.7, 5.0};
  const auto q = composite_points(0.0, 3.0, bp, {8, 0.5, 0});
  // a kink at 1.7 is integrated exactly once split there
  const double got = integrate(q, [](double x) { return std::abs(x - 1.7) + (x > 0.3 ? 1.0 : 0.0); });
  const double exact = 1.7 * 1.7 / 2 + 1.3 * 1.3 / 2 + 2.7;
  CHECK(std::abs(got - exact) < 1e-13);
  for (double x : q.nodes) CHECK((x > 0.0 && x < 3.0));
}

TEST_CASE("graded panels resolve a sqrt layer at the lower limit") {
  const auto coarse = composite_points(0.0, 4.0, {}, {8, 1.0, 0});
  const auto graded = composite_points(0.0, 4.0, {}, {8, 1.0, 12});
  auto f = [](double x) { return 1.0 / std::sqrt(x); };
  const double exact = 4.0;
  CHECK(std::abs(integrate(graded, f) - exact) < std::abs(integrate(coarse, f) - exact) / 50);
}

TEST_CASE("pairwise sum matches a long-double sum and is order-fixed") {
  std::vector<double> v(10001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + i) * (i % 2 ? -1 : 1) + 1e-3;
  long double ref = 0.0L;
  for (double x : v) ref += x;
  CHECK(std::abs(pairwise_sum(v) - static_cast<double>(ref)) < 1e-13);
  CHECK(pairwise_sum(v) == pairwise_sum(v));
}

TEST_CASE("exp_integral and its zero-rate limit") {
  CHECK(exp_integral(0.0, 3.0) == 3.0);
  CHECK(exp_integral(1e-14, 3.0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(exp_integral(0.5, 2.0) == doctest::Approx((1 - std::exp(-1.0)) / 0.5).epsilon(1e-15));
  CHECK(exp_integral(-0.2, 5.0) == doctest::Approx((1 - std::exp(1.0)) / -0.2).epsilon(1e-15));
}

TEST_CASE("normal_cdf against a 50-digit erfc") {
  using big = boost::multiprecision::cpp_dec_float_50;
  for (double x = -30.0; x <= 8.0; x += 0.37) {
    const big ref = erfc(big(-x) / sqrt(big(2))) / 2;
    const double r = ref.convert_to<double>();
    // argument rounding costs about x^2 ulp
    CHECK(oracle::rel_err(normal_cdf(x), r) < 2.3e-16 * (8.0 + x * x));
  }
}
