#include <doctest.h>

#include <cmath>
#include <numbers>

#include "niscal/quadrature.hpp"

using niscal::quadrature::integrate;
using niscal::quadrature::Options;

TEST_CASE("smooth integrand") {
  const auto res = integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
  CHECK(res.converged);
  CHECK(res.value == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("kink handled via breakpoint") {
  const auto res = integrate([](double x) { return std::abs(x); }, -1.0, 2.0, {0.0});
  CHECK(res.converged);
  CHECK(res.value == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("integrable endpoint singularity at a breakpoint") {
  Options opt;
  opt.relative_tolerance = 1e-7;
  const auto res =
      integrate([](double x) { return 1.0 / std::sqrt(std::abs(x)); }, -1.0, 1.0, {0.0}, opt);
  CHECK(res.converged);
  CHECK(res.value == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("narrow peak found by refinement") {
  // Gaussian of width 1e-4 inside [-1, 1]; integral ~ sqrt(pi) * 1e-4.
  const double w = 1e-4;
  const auto res = integrate(
      [w](double x) { return std::exp(-x * x / (w * w)); }, -1.0, 1.0, {0.0});
  CHECK(res.converged);
  CHECK(res.value == doctest::Approx(std::sqrt(std::numbers::pi) * w).epsilon(1e-8));
}

TEST_CASE("empty interval") {
  const auto res = integrate([](double) { return 1.0; }, 1.0, 1.0);
  CHECK(res.converged);
  CHECK(res.value == 0.0);
}
