#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mploc/quadrature.hpp"

using namespace mploc;

TEST_CASE("smooth integrals") {
  const auto r = quad::integrate([](double x) { return std::sin(x); }, 0.0, M_PI);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("endpoint singularities via substitution") {
  // integral_0^1 x^{-1/2} dx = 2
  const auto left =
      quad::integrate_singular_left([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 0.5);
  CHECK(left.value == doctest::Approx(2.0).epsilon(1e-9));

  // integral_0^1 (1-x)^{-1/3} dx = 3/2
  const auto right = quad::integrate_singular_right(
      [](double x) { return std::pow(1.0 - x, -1.0 / 3.0); }, 0.0, 1.0, 1.0 / 3.0);
  CHECK(right.value == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("interior singular points") {
  // integral over [1,3] of |2-E|^{-1/2}: each half contributes 2
  const auto r = quad::integrate_with_singularities(
      [](double e) { return 1.0 / std::sqrt(std::abs(2.0 - e)); }, 1.0, 3.0, {2.0}, 0.5);
  CHECK(r.value == doctest::Approx(4.0).epsilon(1e-8));

  // singularity at the left boundary
  const auto rb = quad::integrate_with_singularities(
      [](double e) { return 1.0 / std::sqrt(std::abs(e)); }, 0.0, 1.0, {0.0}, 0.5);
  CHECK(rb.value == doctest::Approx(2.0).epsilon(1e-8));

  // several poles
  const auto rm = quad::integrate_with_singularities(
      [](double e) {
        return 1.0 / std::sqrt(std::abs(e - 0.5)) + 1.0 / std::sqrt(std::abs(e - 1.5));
      },
      0.0, 2.0, {0.5, 1.5}, 0.5);
  // each term integrates to 2*(sqrt(.5)+... ) : for pole at c in [0,2]:
  // int |e-c|^{-1/2} = 2 sqrt(c) + 2 sqrt(2-c) -> 2(sqrt(.5)+sqrt(1.5)) for both poles
  const double expect = 2.0 * (std::sqrt(0.5) + std::sqrt(1.5)) * 2.0;
  CHECK(rm.value == doctest::Approx(expect).epsilon(1e-7));
}

TEST_CASE("gauss-legendre rule") {
  const auto rule = quad::gauss_legendre(12, -1.0, 2.0);
  double s5 = 0.0, s0 = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    s0 += rule.weights[i];
    s5 += rule.weights[i] * std::pow(rule.nodes[i], 5);
  }
  CHECK(s0 == doctest::Approx(3.0).epsilon(1e-12));
  // integral of x^5 over [-1,2] = (2^6 - 1)/6
  CHECK(s5 == doctest::Approx(63.0 / 6.0).epsilon(1e-12));
}
