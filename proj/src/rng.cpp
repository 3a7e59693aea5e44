#include "shearflow/rng.hpp"

#include <cmath>
#include <numbers>

namespace shearflow {

std::pair<double, double> CounterRng::gaussian_pair() {
  const double u1 = uniform();
  const double u2 = uniform();
  // 1 - u1 lies in (0, 1], so the log is finite.
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phi), r * std::sin(phi)};
}

} // namespace shearflow
