#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "shearflow/tensor.hpp"

namespace shearflow::moments {

inline constexpr const char* kMomentDynamicsVersion = "1.0.0";

// --------------------------------------------------------------- stress ODE
// Right-hand side of the anisotropically rescaled stress evolution
//   dT/dt = Id - mu*(a(x)b T + T b(x)a) - 2 T / tr T,
// written in the coordinates of the given shear frame.
SymTensor2 stress_rhs(const SymTensor2& T, const ShearFrame& frame);

// Rescaled stress components (a, b, c) with
//   T = a t^3 alpha(x)alpha + b t^2 (alpha(x)beta + beta(x)alpha) + c t beta(x)beta.
struct RescaledABC {
  double a = 0.0, b = 0.0, c = 0.0;
};

// Linear part of the rescaled-component dynamics; eigenvalues are exactly
// {-1, -2, -3} (upper triangular).  Row/column order is (a, b, c).
std::array<std::array<double, 3>, 3> matrix_M(double mu);

// Long-time limit of (a, b, c): (mu^2/3, -mu/2, 1).
RescaledABC abc_limit(double mu);

// ------------------------------------------------------- stress trajectory
// Stored nodes of an adaptive integration of the stress ODE from T(0) = T0.
// Above t_switch the (a, b, c) system is integrated in log-time, which keeps
// the step count logarithmic over long horizons; nodes always store T itself.
struct StressTrajectory {
  ShearFrame frame = ShearFrame::standard(1.0);
  double tol = 1e-9;
  std::vector<double> times;      // strictly increasing, times.front() == 0
  std::vector<SymTensor2> stress; // same length as times

  double t_begin() const { return times.front(); }
  double t_end() const { return times.back(); }
  std::size_t size() const { return times.size(); }

  // index of the last node with time <= t
  std::size_t node_before(double t) const;
};

// Integrate the stress ODE from a positive definite T0 to t_end with local
// error tolerance tol.  Throws DegenerateStress if positivity is lost and
// NotPositiveDefinite if T0 is already degenerate.
StressTrajectory integrate_stress(const SymTensor2& T0, const ShearFrame& frame,
                                  double t_end, double tol = 1e-9);

// ------------------------------------------------------- coefficient frame
// The rescaling data derived from T at one instant:
//   theta = tr T,   eta = T^{-1/2},   eta2 = T^{-1},
//   F = (d eta/dt) eta^{-1} - mu * eta (alpha(x)beta) eta^{-1}.
// Any such frame satisfies the algebraic identity
//   F + F^T + eta2 = (2/theta) Id
// exactly; construction enforces a residual of at most 1e-8.
struct CoefficientFrame {
  double t = 0.0;
  double theta = 0.0;
  SymTensor2 T;
  SymTensor2 eta;
  SymTensor2 eta2;
  Mat2 F;
};

// Build the frame at time t from a stress tensor and its time derivative.
CoefficientFrame frame_from_stress(double t, const SymTensor2& T, const ShearFrame& frame);

// Frobenius norm of F + F^T + eta2 - (2/theta) Id for a given frame.
double frame_identity_residual(const CoefficientFrame& cf);

// Frame along a trajectory: re-integrates from the nearest stored node at a
// tight fixed tolerance, so the result does not depend on node spacing.
// t must lie inside [t_begin, t_end] of the trajectory.
CoefficientFrame coefficient_frame(const StressTrajectory& traj, double t);

// ------------------------------------------------------------ moment blocks
// Asymptotic coefficient matrix for the fourth-order defect moments, rows
// and columns ordered (4,0), (3,1), (2,2), (1,3), (0,4).  Entries are exact
// rationals in sqrt(3); the spectrum is {-2, -3, -4, -5, -6}.
std::array<std::array<double, 5>, 5> matrix_N4();

// Entry of the general asymptotic moment matrix between row index (i, j)
// and column index (k, l).  Legal indices have i+j and k+l in {4, 6} and
// either equal orders or the order-coupling shift (k, l) = (i, j-2);
// anything else throws IndexRangeError.  Within the legal set, entries not
// covered by a specific case are zero.
double general_N_entry(int i, int j, int k, int l);

// Defect moments of the rescaled density relative to the Maxwellian.
// Orders <= 2 vanish identically under the rescaling and are not stored.
// h4 is ordered (4,0), (3,1), (2,2), (1,3), (0,4); h6 is ordered
// (6,0), (5,1), ..., (0,6).
struct MomentVector {
  std::array<double, 5> h4{};
  std::array<double, 7> h6{};

  double h4_norm() const;
  double h6_norm() const;
};

struct MomentSeries {
  std::vector<double> times;
  std::vector<MomentVector> h;
};

// Integrate the defect-moment system along a stress trajectory from t0 to
// t1 (both inside the trajectory span).  The sixth-order block co-evolves
// with the fourth-order block, which forces it through the diffusion
// coupling; the fourth-order block is closed because second-order defects
// vanish.  Coefficients theta, F, eta2 are evaluated from the same
// integration state that coefficient_frame exposes.
MomentSeries integrate_moments(const StressTrajectory& traj, const MomentVector& h0,
                               double t0, double t1, double tol = 1e-9);

// Lower-bound data for the convergence rate, from trailing-window power-law
// fits of the moment series: lambda_bar is the fitted decay exponent of
// |h4| and lambda_prime the fitted growth exponent of |h6|.
struct RateBound {
  double lambda_bar = 0.0;
  double lambda_prime = 0.0;
  double five_lambda_bar_plus_two_lambda_prime = 0.0;
  std::function<double(double)> R; // R(t) = t^(lambda_bar + lambda_prime/2)
};

RateBound rate_lower_bound(const MomentSeries& series);

// --------------------------------------------------------- asymptotic table
// Convergence ratios of a trajectory against the closed-form long-time
// shapes.  Every *_ratio column tends to 1 and f_residual tends to 0.
struct AsymptoticsRow {
  double t = 0.0;
  double txx_ratio = 0.0;   // T_aa / (mu^2 t^3 / 3)
  double txy_ratio = 0.0;   // T_ab / (-mu t^2 / 2)
  double tyy_ratio = 0.0;   // T_bb / t
  double theta_ratio = 0.0; // theta * 3 / (mu^2 t^3)
  double eta_xx_ratio = 0.0; // eta_aa * mu t^{3/2} / sqrt 3
  double eta_yy_ratio = 0.0; // eta_bb * sqrt t / 2
  double f_residual = 0.0;  // || 2 t F + (sqrt3 (ab - ba) + 4 bb) ||_F
};

// Sample times default to the decade grid {1, 10, 100, ...} inside the span.
std::vector<AsymptoticsRow> asymptotics_table(const StressTrajectory& traj,
                                              std::vector<double> sample_times = {});

} // namespace shearflow::moments
