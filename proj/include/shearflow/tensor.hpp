#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>

#include "shearflow/errors.hpp"

namespace shearflow {

inline constexpr const char* kTensorCoreVersion = "1.0.0";

// ------------------------------------------------------------------ vectors
struct Vec2 {
  double x = 0.0, y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
};
inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// ------------------------------------------------------------- 2x2 matrices
// General (possibly non-symmetric) 2x2 matrix, row-major component names.
struct Mat2 {
  double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static Mat2 outer(const Vec2& u, const Vec2& v) {
    return {u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y};
  }

  Mat2 operator+(const Mat2& o) const { return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22}; }
  Mat2 operator-(const Mat2& o) const { return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22}; }
  Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
  Mat2 operator*(const Mat2& o) const {
    return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
            a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
  }
  Vec2 operator*(const Vec2& v) const { return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y}; }

  Mat2 transpose() const { return {a11, a21, a12, a22}; }
  Mat2 sym() const { return {a11, 0.5 * (a12 + a21), 0.5 * (a12 + a21), a22}; }
  Mat2 anti() const { return {0.0, 0.5 * (a12 - a21), 0.5 * (a21 - a12), 0.0}; }
  double trace() const { return a11 + a22; }
  double frobenius() const { return std::sqrt(a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22); }
};
inline Mat2 operator*(double s, const Mat2& m) { return m * s; }

// Symmetric 2x2 tensor stored by its three independent components.
struct SymTensor2 {
  double xx = 0.0, xy = 0.0, yy = 0.0;

  static SymTensor2 identity() { return {1.0, 0.0, 1.0}; }

  SymTensor2 operator+(const SymTensor2& o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
  SymTensor2 operator-(const SymTensor2& o) const { return {xx - o.xx, xy - o.xy, yy - o.yy}; }
  SymTensor2 operator*(double s) const { return {xx * s, xy * s, yy * s}; }
  Vec2 operator*(const Vec2& v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }

  double trace() const { return xx + yy; }
  double det() const { return xx * yy - xy * xy; }
  double frobenius() const { return std::sqrt(xx * xx + 2.0 * xy * xy + yy * yy); }
  Mat2 mat() const { return {xx, xy, xy, yy}; }

  // inverse by adjugate; caller guarantees det != 0
  SymTensor2 inverse() const {
    const double d = det();
    return {yy / d, -xy / d, xx / d};
  }
};
inline SymTensor2 operator*(double s, const SymTensor2& t) { return t * s; }
inline SymTensor2 sym_part(const Mat2& m) { return {m.a11, 0.5 * (m.a12 + m.a21), m.a22}; }

// --------------------------------------------------- symmetric 2x2 spectral
// Closed-form spectral decomposition of a symmetric 2x2 tensor.
// l1 >= l2; v1, v2 are the unit eigenvectors (v2 = rot90(v1)).
// The smaller eigenvalue is recovered as det/l1, which avoids the
// cancellation the direct quadratic formula suffers at condition numbers
// around 1e8 and beyond.
struct EigenDecomp2 {
  double l1 = 0.0, l2 = 0.0;
  Vec2 v1, v2;
};

EigenDecomp2 eigen_sym(const SymTensor2& T);

// T^{-1/2} of a positive definite symmetric tensor.
// Throws NotPositiveDefinite when the smaller eigenvalue is non-positive or
// below 1e-13 times the larger one.
SymTensor2 sym_inv_sqrt(const SymTensor2& T);

// T^{1/2} under the same positivity contract.
SymTensor2 sym_sqrt(const SymTensor2& T);

// Derivative of t -> T(t)^{-1/2} given T and dT/dt: the unique symmetric X
// with X*eta + eta*X = d(T^{-1})/dt = -T^{-1} Tdot T^{-1}, solved in the
// eigenbasis of T.
SymTensor2 sym_sqrt_derivative(const SymTensor2& T, const SymTensor2& Tdot);

// ------------------------------------------------------------- shear frame
// Shear geometry: rate mu, flow direction alpha, gradient direction beta.
// alpha and beta must be unit length and orthogonal within 1e-12.
struct ShearFrame {
  double mu = 1.0;
  Vec2 alpha{1.0, 0.0};
  Vec2 beta{0.0, 1.0};

  ShearFrame(double mu_, const Vec2& alpha_, const Vec2& beta_);
  static ShearFrame standard(double mu_) { return ShearFrame(mu_, {1.0, 0.0}, {0.0, 1.0}); }

  // alpha (x) beta as a matrix
  Mat2 shear_matrix() const { return Mat2::outer(alpha, beta); }
};

// ------------------------------------------- phase-space symmetry checks
// A phase-space density sample f(z, w) (position, velocity).
using PhaseFunction = std::function<double(const Vec2&, const Vec2&)>;

// Maximum of |f(z + x*alpha + y*beta, w + mu*y*alpha) - f(z, w)| over random
// draws of (z, w, x, y).  Vanishes exactly for densities that are invariant
// under the shear translation group.
double check_objectivity(const PhaseFunction& f, const ShearFrame& frame,
                         int n_samples, std::uint64_t seed);

// Maximum residual of the differential form of the same invariance,
//   grad_z f + mu * (grad_w f . alpha) * beta = 0,
// with both gradients estimated by central finite differences of step
// fd_step.  A non-invariant density returns an O(1) residual.
double symrel_residual(const PhaseFunction& f, const ShearFrame& frame,
                       int n_samples, std::uint64_t seed, double fd_step = 1e-6);

} // namespace shearflow
