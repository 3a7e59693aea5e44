#include "shearflow/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shearflow/rng.hpp"

namespace shearflow {

EigenDecomp2 eigen_sym(const SymTensor2& T) {
  EigenDecomp2 e;
  const double tr = T.trace();
  const double df = T.xx - T.yy;
  const double disc = std::sqrt(df * df + 4.0 * T.xy * T.xy);

  // Recover the larger-magnitude eigenvalue first; the other one follows
  // from the product, which sidesteps the catastrophic cancellation of
  // (tr -+ disc)/2 for nearly singular input.
  double lbig = (tr >= 0.0) ? 0.5 * (tr + disc) : 0.5 * (tr - disc);
  double lother = (lbig != 0.0) ? T.det() / lbig : 0.0;
  e.l1 = std::max(lbig, lother);
  e.l2 = std::min(lbig, lother);

  // Two candidate eigenvector formulas for l1; at least one is well
  // conditioned (both degenerate only when T is a multiple of the identity).
  const Vec2 c1(T.xy, e.l1 - T.xx);
  const Vec2 c2(e.l1 - T.yy, T.xy);
  Vec2 v = (c1.norm2() >= c2.norm2()) ? c1 : c2;
  const double nv = v.norm();
  if (nv == 0.0) {
    v = Vec2(1.0, 0.0);
  } else {
    v = v * (1.0 / nv);
  }
  e.v1 = v;
  e.v2 = Vec2(-v.y, v.x);
  return e;
}

namespace {

// Spectral function application with the shared positivity contract.
SymTensor2 spectral_apply(const SymTensor2& T, double (*fn)(double), const char* op) {
  const EigenDecomp2 e = eigen_sym(T);
  if (!(e.l2 > 0.0) || e.l2 < 1e-13 * e.l1) {
    throw NotPositiveDefinite(std::string(op) + ": eigenvalues " + std::to_string(e.l1) +
                              ", " + std::to_string(e.l2) + " are not safely positive");
  }
  const double f1 = fn(e.l1);
  const double f2 = fn(e.l2);
  return {f1 * e.v1.x * e.v1.x + f2 * e.v2.x * e.v2.x,
          f1 * e.v1.x * e.v1.y + f2 * e.v2.x * e.v2.y,
          f1 * e.v1.y * e.v1.y + f2 * e.v2.y * e.v2.y};
}

double inv_sqrt(double l) { return 1.0 / std::sqrt(l); }

} // namespace

SymTensor2 sym_inv_sqrt(const SymTensor2& T) { return spectral_apply(T, &inv_sqrt, "sym_inv_sqrt"); }

SymTensor2 sym_sqrt(const SymTensor2& T) { return spectral_apply(T, &std::sqrt, "sym_sqrt"); }

SymTensor2 sym_sqrt_derivative(const SymTensor2& T, const SymTensor2& Tdot) {
  const EigenDecomp2 e = eigen_sym(T);
  if (!(e.l2 > 0.0) || e.l2 < 1e-13 * e.l1) {
    throw NotPositiveDefinite("sym_sqrt_derivative: tensor is not safely positive definite");
  }
  // Components of Tdot in the eigenbasis of T.
  const Mat2 Td = Tdot.mat();
  const double d11 = e.v1.dot(Td * e.v1);
  const double d12 = e.v1.dot(Td * e.v2);
  const double d22 = e.v2.dot(Td * e.v2);
  // W = d(T^{-1})/dt in the eigenbasis: W_ij = -Tdot_ij / (l_i l_j).
  const double w11 = -d11 / (e.l1 * e.l1);
  const double w12 = -d12 / (e.l1 * e.l2);
  const double w22 = -d22 / (e.l2 * e.l2);
  // Solve X eta + eta X = W with eta = diag(s1, s2), s_i = l_i^{-1/2}.
  const double s1 = 1.0 / std::sqrt(e.l1);
  const double s2 = 1.0 / std::sqrt(e.l2);
  const double x11 = w11 / (2.0 * s1);
  const double x12 = w12 / (s1 + s2);
  const double x22 = w22 / (2.0 * s2);
  // Rotate back: X = sum_ij x_ij v_i (x) v_j (symmetric).
  return {x11 * e.v1.x * e.v1.x + 2.0 * x12 * e.v1.x * e.v2.x + x22 * e.v2.x * e.v2.x,
          x11 * e.v1.x * e.v1.y + x12 * (e.v1.x * e.v2.y + e.v2.x * e.v1.y) +
              x22 * e.v2.x * e.v2.y,
          x11 * e.v1.y * e.v1.y + 2.0 * x12 * e.v1.y * e.v2.y + x22 * e.v2.y * e.v2.y};
}

ShearFrame::ShearFrame(double mu_, const Vec2& alpha_, const Vec2& beta_)
    : mu(mu_), alpha(alpha_), beta(beta_) {
  if (std::abs(alpha.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("ShearFrame: alpha is not unit length");
  if (std::abs(beta.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("ShearFrame: beta is not unit length");
  if (std::abs(alpha.dot(beta)) > 1e-12)
    throw std::invalid_argument("ShearFrame: alpha and beta are not orthogonal");
  if (!std::isfinite(mu)) throw std::invalid_argument("ShearFrame: mu is not finite");
}

double check_objectivity(const PhaseFunction& f, const ShearFrame& frame, int n_samples,
                         std::uint64_t seed) {
  CounterRng rng(seed);
  double worst = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    const Vec2 z(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    const Vec2 w(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    const double x = rng.uniform(-1.0, 1.0);
    const double y = rng.uniform(-1.0, 1.0);
    const Vec2 z2 = z + x * frame.alpha + y * frame.beta;
    const Vec2 w2 = w + frame.mu * y * frame.alpha;
    worst = std::max(worst, std::abs(f(z2, w2) - f(z, w)));
  }
  return worst;
}

double symrel_residual(const PhaseFunction& f, const ShearFrame& frame, int n_samples,
                       std::uint64_t seed, double fd_step) {
  CounterRng rng(seed);
  const double h = fd_step;
  double worst = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    const Vec2 z(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    const Vec2 w(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    const Vec2 gz((f({z.x + h, z.y}, w) - f({z.x - h, z.y}, w)) / (2.0 * h),
                  (f({z.x, z.y + h}, w) - f({z.x, z.y - h}, w)) / (2.0 * h));
    const Vec2 gw((f(z, {w.x + h, w.y}) - f(z, {w.x - h, w.y})) / (2.0 * h),
                  (f(z, {w.x, w.y + h}) - f(z, {w.x, w.y - h})) / (2.0 * h));
    const Vec2 res = gz + frame.mu * gw.dot(frame.alpha) * frame.beta;
    worst = std::max(worst, res.norm());
  }
  return worst;
}

} // namespace shearflow
