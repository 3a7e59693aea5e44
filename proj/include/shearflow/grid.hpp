#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "shearflow/tensor.hpp"

namespace shearflow::fp {

inline constexpr const char* kShapeSolverVersion = "1.0.0";

// Cell-centered uniform grid on [-L, L]^2 with n cells per axis.
struct VelocityGrid {
  int n = 128;
  double L = 8.0;

  VelocityGrid(int n_, double L_);

  double h() const { return 2.0 * L / n; }
  double coord(int i) const { return -L + (i + 0.5) * h(); }
  std::size_t cells() const { return static_cast<std::size_t>(n) * n; }
};

// Discrete density on a velocity grid, values row-major: v[i*n + j] is the
// cell centered at (coord(i), coord(j)).  clip_negative zeroes values in
// [-1e-6 * max|v|, 0) (counted, never silently); the band covers rounding
// and far-tail truncation wiggles, while a negative value below it
// indicates a stability bug and throws.
class DensityField {
public:
  DensityField(const VelocityGrid& grid, double fill = 0.0);

  const VelocityGrid& grid() const { return grid_; }
  double& at(int i, int j) { return v_[idx(i, j)]; }
  double at(int i, int j) const { return v_[idx(i, j)]; }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }

  // moments by midpoint quadrature (fixed summation order)
  double mass() const;
  Vec2 mean() const;               // first moment vector
  SymTensor2 second_moment() const; // integral of G p(x)p
  double moment(int ix, int iy) const;
  double l1_distance(const DensityField& other) const;

  // clip slightly negative values (see class comment); returns count clipped
  long clip_negative();
  long clipped_total() const { return clipped_total_; }

private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * grid_.n + j; }
  VelocityGrid grid_;
  std::vector<double> v_;
  long clipped_total_ = 0;
};

// Reference Maxwellian exp(-|p|^2/4) / (4 pi): unit mass, zero mean,
// second moment 2*Id.
double maxwellian_value(const Vec2& p);
DensityField maxwellian(const VelocityGrid& grid);

// ----------------------------------------------------------- initial data
// Raw (unnormalized-shape) menu entries, each sampled from its analytic
// formula and scaled to unit discrete mass:
//  * maxwellian(grid)                      -- the fixed point itself
//  * gaussian_field(grid, cov, mean)      -- one anisotropic Gaussian
//  * two_bump_field(grid, d, sigma2, w1)  -- mixture w1 N(+d, s2 Id) + (1-w1) N(-d, s2 Id)
DensityField gaussian_field(const VelocityGrid& grid, const SymTensor2& cov,
                            const Vec2& mean = {0.0, 0.0});
DensityField two_bump_field(const VelocityGrid& grid, const Vec2& d, double sigma2,
                            double w1 = 0.5);

// Shape-normalized initial data: unit mass, centered, and covariance mapped
// to 2*Id by one linear change of variables applied to the analytic formula
// before sampling.  A Gaussian input becomes exactly the reference
// Maxwellian under this map (the Gaussian family is closed under linear
// maps), so non-trivial shape dynamics need the two-bump entry.
DensityField normalized_gaussian(const VelocityGrid& grid, const SymTensor2& cov);
DensityField normalized_two_bump(const VelocityGrid& grid, const Vec2& d, double sigma2);

// ------------------------------------------------------------- binary IO
// Field snapshot format: three little-endian 64-bit header words
// (n, L, t) -- n as unsigned integer, L and t as IEEE doubles -- followed by
// n*n row-major doubles.
void write_field(const DensityField& field, double t, const std::filesystem::path& path);
DensityField read_field(const std::filesystem::path& path, double& t_out);

} // namespace shearflow::fp
