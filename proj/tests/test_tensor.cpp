#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shearflow/rng.hpp"
#include "shearflow/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace shearflow;

namespace {

Eigen::Matrix2d to_eigen(const SymTensor2& T) {
  Eigen::Matrix2d m;
  m << T.xx, T.xy, T.xy, T.yy;
  return m;
}

double frob_diff(const SymTensor2& a, const Eigen::Matrix2d& b) {
  return (to_eigen(a) - b).norm();
}

} // namespace

TEST_CASE("Mat2 and SymTensor2 algebra") {
  const Mat2 m{1.0, 2.0, 3.0, 4.0};
  CHECK(m.trace() == 5.0);
  CHECK(m.transpose().a12 == 3.0);
  CHECK(m.sym().a12 == 2.5);
  CHECK(m.anti().a12 == doctest::Approx(-0.5));
  const Mat2 outer = Mat2::outer({1.0, 2.0}, {3.0, 4.0});
  CHECK(outer.a11 == 3.0);
  CHECK(outer.a12 == 4.0);
  CHECK(outer.a21 == 6.0);
  CHECK(outer.a22 == 8.0);

  const SymTensor2 T{2.0, 1.0, 3.0};
  CHECK(T.det() == doctest::Approx(5.0));
  const SymTensor2 Ti = T.inverse();
  const Mat2 prod = T.mat() * Ti.mat();
  CHECK((prod - Mat2::identity()).frobenius() < 1e-15);
}

TEST_CASE("eigen_sym matches a dense solver on random tensors") {
  CounterRng rng(2024);
  for (int k = 0; k < 200; ++k) {
    // random symmetric with eigenvalues of either sign
    const double a = rng.uniform(-3.0, 3.0);
    const double b = rng.uniform(-3.0, 3.0);
    const double c = rng.uniform(-3.0, 3.0);
    const SymTensor2 T{a, b, c};
    const EigenDecomp2 d = eigen_sym(T);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(to_eigen(T));
    CHECK(d.l2 == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-12));
    CHECK(d.l1 == doctest::Approx(es.eigenvalues()(1)).epsilon(1e-12));

    // reconstruction l1 v1 v1^T + l2 v2 v2^T == T
    const Mat2 rec = Mat2::outer(d.v1, d.v1) * d.l1 + Mat2::outer(d.v2, d.v2) * d.l2;
    CHECK((rec - T.mat()).frobenius() < 1e-12 * (1.0 + T.frobenius()));
    // orthonormality
    CHECK(d.v1.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(d.v1.dot(d.v2)) < 1e-14);
  }
}

TEST_CASE("eigen_sym survives high condition numbers") {
  const SymTensor2 T{1.0 + 1e-9, 0.0, 1.0};
  const EigenDecomp2 d = eigen_sym(T);
  CHECK(d.l1 == doctest::Approx(1.0 + 1e-9).epsilon(1e-14));
  CHECK(d.l2 == doctest::Approx(1.0).epsilon(1e-14));

  // l2 via det/l1 keeps relative accuracy where the quadratic formula cancels
  const SymTensor2 S{1e8, 1.0, 1e-8 + 1.0 / 1e8};
  const EigenDecomp2 ds = eigen_sym(S);
  const double det = S.det();
  CHECK(ds.l1 * ds.l2 == doctest::Approx(det).epsilon(1e-12));
}

TEST_CASE("sym_inv_sqrt pinned values and contract") {
  const SymTensor2 T{2.0, 1.0, 2.0};
  const SymTensor2 eta = sym_inv_sqrt(T);
  CHECK(eta.xx == doctest::Approx(0.78867513459481275).epsilon(1e-14));
  CHECK(eta.xy == doctest::Approx(-0.21132486540518702).epsilon(1e-14));
  CHECK(eta.yy == doctest::Approx(0.78867513459481275).epsilon(1e-14));
  const Mat2 should_be_id = eta.mat() * T.mat() * eta.mat();
  CHECK((should_be_id - Mat2::identity()).frobenius() < 1e-14);

  const SymTensor2 root = sym_sqrt(T);
  CHECK((root.mat() * root.mat() - T.mat()).frobenius() < 1e-14);

  CHECK_THROWS_AS(sym_inv_sqrt(SymTensor2{1.0, 0.0, -1.0}), NotPositiveDefinite);
  CHECK_THROWS_AS(sym_inv_sqrt(SymTensor2{1.0, 0.0, 0.0}), NotPositiveDefinite);
  CHECK_THROWS_AS(sym_inv_sqrt(SymTensor2{1.0, 0.0, 1e-14}), NotPositiveDefinite);
}

TEST_CASE("sym_inv_sqrt matches Eigen operator square root on random PD tensors") {
  CounterRng rng(7);
  for (int k = 0; k < 100; ++k) {
    const double a = rng.uniform(0.2, 4.0);
    const double c = rng.uniform(0.2, 4.0);
    const double b = rng.uniform(-0.9, 0.9) * std::sqrt(a * c);
    const SymTensor2 T{a, b, c};
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(to_eigen(T));
    const Eigen::Matrix2d ref = es.operatorInverseSqrt();
    CHECK(frob_diff(sym_inv_sqrt(T), ref) < 1e-13);
  }
}

TEST_CASE("sym_sqrt_derivative closed-form cases and finite differences") {
  // T = Id, Tdot = 2 Id: eta(s) = (Id + 2 s)^{-1/2}, d/ds at 0 = -Id
  const SymTensor2 d1 = sym_sqrt_derivative(SymTensor2::identity(), SymTensor2{2.0, 0.0, 2.0});
  CHECK(d1.xx == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(d1.xy == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(d1.yy == doctest::Approx(-1.0).epsilon(1e-14));

  // diagonal case: d/dt lambda^{-1/2} = -ldot / (2 lambda^{3/2})
  const SymTensor2 d2 = sym_sqrt_derivative(SymTensor2{4.0, 0.0, 1.0}, SymTensor2{1.0, 0.0, 0.0});
  CHECK(d2.xx == doctest::Approx(-1.0 / 16.0).epsilon(1e-14));
  CHECK(d2.xy == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(d2.yy == doctest::Approx(0.0).epsilon(1e-14));

  // finite-difference check along random PD paths
  CounterRng rng(99);
  for (int k = 0; k < 50; ++k) {
    const double a = rng.uniform(0.5, 3.0);
    const double c = rng.uniform(0.5, 3.0);
    const double b = rng.uniform(-0.8, 0.8) * std::sqrt(a * c);
    const SymTensor2 T{a, b, c};
    const SymTensor2 Td{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const double eps = 1e-6;
    const SymTensor2 plus = sym_inv_sqrt(T + Td * eps);
    const SymTensor2 minus = sym_inv_sqrt(T + Td * (-eps));
    const SymTensor2 fd = (plus - minus) * (0.5 / eps);
    const SymTensor2 an = sym_sqrt_derivative(T, Td);
    CHECK((fd - an).frobenius() < 1e-7 * (1.0 + an.frobenius()));
  }
}

TEST_CASE("ShearFrame validates its geometry") {
  CHECK_NOTHROW(ShearFrame(1.5, {1.0, 0.0}, {0.0, 1.0}));
  const double s = std::sqrt(0.5);
  CHECK_NOTHROW(ShearFrame(1.0, {s, s}, {-s, s}));
  CHECK_THROWS_AS(ShearFrame(1.0, {1.1, 0.0}, {0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(ShearFrame(1.0, {1.0, 0.0}, {s, s}), std::invalid_argument);

  const ShearFrame f = ShearFrame::standard(2.0);
  const Mat2 S = f.shear_matrix();
  CHECK(S.a11 == 0.0);
  CHECK(S.a12 == 1.0);
  CHECK(S.a21 == 0.0);
  CHECK(S.a22 == 0.0);
}

TEST_CASE("check_objectivity separates invariant from generic densities") {
  const ShearFrame frame = ShearFrame::standard(1.3);
  // invariant density: depends on z and w only through w - mu (beta.z) alpha
  const PhaseFunction invariant = [&frame](const Vec2& z, const Vec2& w) {
    const Vec2 shifted = w - frame.alpha * (frame.mu * frame.beta.dot(z));
    return std::exp(-0.5 * shifted.norm2());
  };
  CHECK(check_objectivity(invariant, frame, 400, 11) < 1e-12);

  const PhaseFunction generic = [](const Vec2& z, const Vec2& w) {
    return std::exp(-z.norm2() - 0.5 * w.norm2());
  };
  CHECK(check_objectivity(generic, frame, 400, 11) > 1e-2);
}

TEST_CASE("symrel_residual flags non-invariant densities") {
  const ShearFrame frame = ShearFrame::standard(0.8);
  const PhaseFunction invariant = [&frame](const Vec2& z, const Vec2& w) {
    const Vec2 shifted = w - frame.alpha * (frame.mu * frame.beta.dot(z));
    return std::exp(-0.5 * shifted.norm2());
  };
  CHECK(symrel_residual(invariant, frame, 200, 5) < 1e-5);

  const PhaseFunction generic = [](const Vec2& z, const Vec2& w) {
    return std::exp(-z.norm2() - 0.5 * w.norm2());
  };
  CHECK(symrel_residual(generic, frame, 200, 5) > 1e-2);
}

TEST_CASE("CounterRng is reproducible and repositionable") {
  CounterRng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  const std::uint64_t mark = a.counter();
  const double x = a.uniform();
  a.set_counter(mark);
  CHECK(a.uniform() == x);

  // gaussian pair consumes exactly two draws
  CounterRng c(1), d(1);
  (void)c.gaussian_pair();
  d.set_counter(d.counter() + 2);
  CHECK(c.counter() == d.counter());

  // moments of the gaussian output
  CounterRng g(3);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n / 2; ++i) {
    const auto [u, v] = g.gaussian_pair();
    sum += u + v;
    sum2 += u * u + v * v;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.01));
}
