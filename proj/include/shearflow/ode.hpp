#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>

#include "shearflow/errors.hpp"

namespace shearflow::ode {

// Adaptive embedded Runge-Kutta 5(4) (Dormand-Prince) on a fixed-size state.
// Error control is mixed absolute/relative per component; the observer is
// called at every accepted step (including the initial state).
//
// This is deliberately a small first-party integrator: the systems in this
// project are 3- to 15-dimensional and smooth, and the tests pin its
// behavior against closed-form limits, so a dependency on a full ODE suite
// would buy nothing.
template <std::size_t N>
struct DormandPrince {
  using State = std::array<double, N>;
  using Rhs = std::function<void(double, const State&, State&)>;
  using Observer = std::function<void(double, const State&)>;

  double rtol = 1e-9;
  double atol = 1e-12;
  double max_factor = 5.0;
  double min_factor = 0.2;
  double safety = 0.9;
  long max_steps = 20'000'000;

  // integrate y from t0 to t1 (t1 > t0), mutating y in place
  void integrate(const Rhs& f, double t0, double t1, State& y,
                 const Observer& observe = nullptr) const {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // embedded 4th-order weights
    static constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                            e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

    double t = t0;
    State k1, k2, k3, k4, k5, k6, k7, ytmp, y5;
    f(t, y, k1);
    if (observe) observe(t, y);

    double dt = initial_step(t0, t1);
    long steps = 0;
    while (t < t1) {
      if (++steps > max_steps)
        throw StepFailure("adaptive integrator exceeded its step budget");
      dt = std::min(dt, t1 - t);

      for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + dt * a21 * k1[i];
      f(t + c2 * dt, ytmp, k2);
      for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + dt * (a31 * k1[i] + a32 * k2[i]);
      f(t + c3 * dt, ytmp, k3);
      for (std::size_t i = 0; i < N; ++i)
        ytmp[i] = y[i] + dt * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      f(t + c4 * dt, ytmp, k4);
      for (std::size_t i = 0; i < N; ++i)
        ytmp[i] = y[i] + dt * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      f(t + c5 * dt, ytmp, k5);
      for (std::size_t i = 0; i < N; ++i)
        ytmp[i] = y[i] + dt * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      f(t + dt, ytmp, k6);
      for (std::size_t i = 0; i < N; ++i)
        y5[i] = y[i] + dt * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
      f(t + dt, y5, k7);

      double err = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        const double y4 = y[i] + dt * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                       e6 * k6[i] + e7 * k7[i]);
        const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
        const double r = (y5[i] - y4) / sc;
        err += r * r;
      }
      err = std::sqrt(err / static_cast<double>(N));

      if (err <= 1.0) { // accept
        t += dt;
        y = y5;
        k1 = k7; // first-same-as-last
        if (observe) observe(t, y);
      }
      const double grow =
          (err == 0.0) ? max_factor
                       : std::clamp(safety * std::pow(err, -0.2), min_factor, max_factor);
      dt *= grow;
      if (!(dt > 0.0) || dt < 1e-14 * std::max(1.0, std::abs(t)))
        throw StepFailure("adaptive integrator step size underflow at t=" + std::to_string(t));
    }
  }

private:
  double initial_step(double t0, double t1) const {
    return std::min(1e-4 * (t1 - t0) + 1e-12, 1e-2);
  }
};

} // namespace shearflow::ode
