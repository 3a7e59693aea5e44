#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shearflow/hypoco.hpp"

#include <cmath>
#include <vector>

using namespace shearflow;
using namespace shearflow::fp;

namespace {

const double kSqrt3 = std::sqrt(3.0);

std::vector<double> fill(const VelocityGrid& g, double (*f)(double, double)) {
  std::vector<double> u(static_cast<std::size_t>(g.n) * g.n);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      u[static_cast<std::size_t>(i) * g.n + j] = f(g.coord(i), g.coord(j));
  return u;
}

// sup over interior cells (two-cell margin keeps one-sided closures out)
double interior_sup_diff(const VelocityGrid& g, const std::vector<double>& a,
                         const std::vector<double>& b) {
  double sup = 0.0;
  for (int i = 2; i < g.n - 2; ++i)
    for (int j = 2; j < g.n - 2; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * g.n + j;
      sup = std::max(sup, std::abs(a[k] - b[k]));
    }
  return sup;
}

} // namespace

TEST_CASE("A and C are exact on low-degree polynomials") {
  const VelocityGrid g(64, 8.0);

  // A = 2 d2 on p2^2 gives 4 p2; centered differences are exact on quadratics
  const auto au = apply_A(g, fill(g, [](double, double y) { return y * y; }));
  const auto p2x4 = fill(g, [](double, double y) { return 4.0 * y; });
  CHECK(interior_sup_diff(g, au, p2x4) < 1e-12);

  // C = -sqrt3 d1 on p1^2 gives -2 sqrt3 p1
  const auto cu = apply_C_exact(g, fill(g, [](double x, double) { return x * x; }));
  std::vector<double> expect(cu.size());
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      expect[static_cast<std::size_t>(i) * g.n + j] = -2.0 * kSqrt3 * g.coord(i);
  CHECK(interior_sup_diff(g, cu, expect) < 1e-12);

  // B annihilates radial functions: (p2 d1 - p1 d2)(|p|^2) = 0
  const auto bu = apply_B(g, fill(g, [](double x, double y) { return x * x + y * y; }));
  CHECK(interior_sup_diff(g, bu, std::vector<double>(bu.size(), 0.0)) < 1e-12);

  CHECK_THROWS_AS(weighted_dot(g, au, std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST_CASE("weighted inner product reproduces Maxwellian moments") {
  const VelocityGrid g(128, 8.0);
  const std::vector<double> one(static_cast<std::size_t>(g.n) * g.n, 1.0);
  CHECK(weighted_dot(g, one, one) == doctest::Approx(1.0).epsilon(1e-7));

  const auto p1 = fill(g, [](double x, double) { return x; });
  const auto p2 = fill(g, [](double, double y) { return y; });
  CHECK(weighted_dot(g, p1, p1) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(std::abs(weighted_dot(g, p1, p2)) < 1e-12);
}

TEST_CASE("discrete [A,B] converges to C at second order with the pinned p1^3 error") {
  const auto checks = commutator_orders({32, 64, 128});
  REQUIRE(checks.size() == 3);

  for (const auto& c : checks) {
    // worst probe is p1^3: D1(p1^3) = 3 p1^2 + h^2 exactly, so the
    // commutator defect is sqrt3 h^2 with no higher-order remainder
    CHECK(c.max_error == doctest::Approx(kSqrt3 * c.h * c.h).epsilon(1e-10));
  }
  const double order1 = std::log2(checks[0].max_error / checks[1].max_error);
  const double order2 = std::log2(checks[1].max_error / checks[2].max_error);
  CHECK(order1 > 1.9);
  CHECK(order2 > 1.9);
}

TEST_CASE("coercivity constant of A*A + C*C on mean-zero functions is near 3/2") {
  CHECK_THROWS_AS(rayleigh_kappa(32), std::invalid_argument);
  const double kappa = rayleigh_kappa(64);
  CHECK(kappa > 1.3);
  CHECK(kappa < 1.7);
}

TEST_CASE("autonomous decay run fits a positive rate near 1/2") {
  const DecayResult res = autonomous_decay_run(64, 8.0, 6.0);
  REQUIRE(res.s.size() >= 16);
  CHECK(res.h1_norm.front() > res.h1_norm.back());
  // norm decays monotonically after an initial transient
  for (std::size_t k = res.s.size() / 4; k + 1 < res.s.size(); ++k)
    CHECK(res.h1_norm[k + 1] <= res.h1_norm[k] * (1.0 + 1e-10));
  CHECK(res.fitted_lambda > 0.3);
  CHECK(res.fitted_lambda < 0.9);
}
