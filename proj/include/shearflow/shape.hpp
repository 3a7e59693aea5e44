#pragma once

#include <array>
#include <optional>
#include <vector>

#include "shearflow/grid.hpp"
#include "shearflow/moments.hpp"

namespace shearflow::fp {

// --------------------------------------------------------------- shape RHS
// Flux-form discretization of the rescaled shape equation
//   dG/dt = div( G (theta^{-1} Id - F) p + eta2 grad G ).
// Using the frame identity F + F^T + eta2 = (2/theta) Id the flux splits as
//   J = eta2 G^M grad(G/G^M)  -  G F_anti p,
// with F_anti the antisymmetric part of F.  The first term vanishes
// identically on the discrete Maxwellian (gradients of G/G^M are exactly
// zero).  The diffusion tensor is split at its smaller eigenvalue: the
// isotropic share is discretized with normal two-point face gradients of
// G/G^M and analytic Maxwellian face weights, the positive-semidefinite
// remainder with full gradients at cell corners, whose quadratic form is a
// weighted sum of (grad r)^T Dc (grad r) over corners and therefore
// dissipative for any positive definite tensor.  The rotation term advects
// the ratio G/G^M with centered face averages against telescoped Maxwellian
// face weights whose cell differences reproduce the radial derivative of
// the Maxwellian exactly; the resulting face mass flux is divergence-free
// cell by cell, so the Maxwellian is an exact discrete steady state of the
// full operator and the advection is exactly energy-neutral in the
// Maxwellian-weighted norm.  The field fa (-p2, p1) is tangent to the
// Maxwellian level sets, so a donor-cell bias would feed a one-signed
// reaction on G/G^M in the far tail and destabilize long coupled runs;
// centered averaging is required.
DensityField shape_rhs(const DensityField& G, const moments::CoefficientFrame& frame);

// Largest stable explicit step for the current coefficients (both the
// diffusive and advective restrictions, with the safety factor applied).
double cfl_limit(const DensityField& G, const moments::CoefficientFrame& frame,
                 double safety = 0.4);

// One strong-stability-preserving RK3 step.  Throws CFLViolation when dt
// exceeds the current stability limit.
void step(DensityField& G, const moments::CoefficientFrame& frame, double dt);

// ----------------------------------------------------------- entropy pair
// Relative entropy S[G] = integral (log G + |p|^2/2) G; cells with G below
// 1e-300 are masked (their limit contribution is zero) and counted.
double entropy(const DensityField& G);

// Entropy dissipation functional
//   D[G] = integral (1/G) | eta (G p/2 + grad G) |^2  >= 0,
// which equals -dS/dt along solutions of the shape equation whenever the
// second moment of G is exactly 2 Id (the invariant of the shape flow); the
// cross term integrates to tr(eta2) * (mass - second_moment:Id/2) = 0.
double entropy_dissipation(const DensityField& G, const moments::CoefficientFrame& frame);

// ------------------------------------------------------------ coupled run
struct CoupledSeries {
  std::vector<double> t;
  std::vector<double> l1_to_maxwellian;
  std::vector<double> entropy;
  std::vector<double> dissipation;
  std::vector<double> cov_defect; // || second_moment/2 - Id ||_F
  std::vector<std::array<double, 5>> h4; // grid fourth-order defect moments
};

struct CoupledOptions {
  double record_growth = 1.02; // record when t grows by this factor
  int snapshot_count = 0;      // optional field snapshots, evenly spaced in log t
};

struct CoupledResult {
  CoupledSeries series;
  DensityField final_field;
  std::vector<std::pair<double, DensityField>> snapshots;
  long steps = 0;
};

// Evolve G0 with coefficients taken from the stress trajectory over
// [t0, t1] (inside the trajectory span).  Frames are refreshed from the
// trajectory as the step size grows; time stepping is SSP-RK3 at the CFL
// limit.
CoupledResult run_coupled(const DensityField& G0, const moments::StressTrajectory& traj,
                          double t0, double t1, const CoupledOptions& opts = {});

// -------------------------------------------------------- mu = 0 dynamics
// Spatially homogeneous relaxation
//   dg/dt = Lap g + gamma div( g (w - u) ),
// with gamma = rho/theta_c and u the mean velocity; mass, momentum and the
// centered energy theta_c are conserved, so gamma and u are frozen at their
// (conserved) initial discrete values and the flux is written as
// M grad(g/M) for the matched Maxwellian M.  Face gradients use a
// fourth-order two-sided stencil (two-point at wall-adjacent faces), which
// keeps momentum and energy drift at the 1e-7 scale while the matched
// Maxwellian stays exactly stationary.
struct Mu0Series {
  std::vector<double> t;
  std::vector<double> l1_to_matched; // L1 distance to the matched Maxwellian
};

struct Mu0Result {
  Mu0Series series;
  DensityField final_field;
  double mass_drift = 0.0;     // relative
  double momentum_drift = 0.0; // relative to sqrt(theta_c) momentum scale
  double energy_drift = 0.0;   // relative
  double gamma = 0.0;
  Vec2 u0;
  double theta_c = 0.0;
};

Mu0Result mu_zero_run(const DensityField& g0, double t_end, double record_dt = 0.05);

// --------------------------------------------------- physical reconstruction
// Reconstruction of the physical phase-space density from the rescaled
// shape: f(z, w) = det(eta) G( eta (w - mu (alpha(x)beta) z) ), with G read
// from the grid by bilinear interpolation and zero outside the domain.
// The result is invariant under the shear translation group by
// construction, which check_objectivity verifies at rounding level.
class PhysicalReconstruction {
public:
  PhysicalReconstruction(const DensityField& G, const moments::CoefficientFrame& frame,
                         const ShearFrame& shear);
  double operator()(const Vec2& z, const Vec2& w) const;
  PhaseFunction as_function() const;

private:
  DensityField G_;
  moments::CoefficientFrame frame_;
  ShearFrame shear_;
  double det_eta_;
};

PhysicalReconstruction reconstruct_physical(const DensityField& G,
                                            const moments::CoefficientFrame& frame,
                                            const ShearFrame& shear);

// Bilinear sample of a field at point p (zero outside the cell-center hull).
double sample_bilinear(const DensityField& G, const Vec2& p);

} // namespace shearflow::fp
