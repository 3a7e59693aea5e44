#include "shearflow/hypoco.hpp"

#include "shearflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace shearflow::fp {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

std::size_t id2(const VelocityGrid& g, int i, int j) {
  return static_cast<std::size_t>(i) * g.n + j;
}

// Centered first differences with one-sided closure at the outermost cells.
double d1(const VelocityGrid& g, const std::vector<double>& u, int i, int j) {
  const double h = g.h();
  if (i == 0) return (u[id2(g, 1, j)] - u[id2(g, 0, j)]) / h;
  if (i == g.n - 1) return (u[id2(g, i, j)] - u[id2(g, i - 1, j)]) / h;
  return (u[id2(g, i + 1, j)] - u[id2(g, i - 1, j)]) / (2.0 * h);
}

double d2(const VelocityGrid& g, const std::vector<double>& u, int i, int j) {
  const double h = g.h();
  if (j == 0) return (u[id2(g, i, 1)] - u[id2(g, i, 0)]) / h;
  if (j == g.n - 1) return (u[id2(g, i, j)] - u[id2(g, i, j - 1)]) / h;
  return (u[id2(g, i, j + 1)] - u[id2(g, i, j - 1)]) / (2.0 * h);
}

struct Weights {
  std::vector<double> cell;  // n*n Maxwellian weights
  std::vector<double> xface; // (n-1)*n
  std::vector<double> yface; // n*(n-1)
};

Weights make_weights(const VelocityGrid& g) {
  Weights w;
  const int n = g.n;
  const double h = g.h();
  w.cell.resize(static_cast<std::size_t>(n) * n);
  w.xface.resize(static_cast<std::size_t>(n - 1) * n);
  w.yface.resize(static_cast<std::size_t>(n) * (n - 1));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      w.cell[id2(g, i, j)] = maxwellian_value({g.coord(i), g.coord(j)});
  for (int i = 0; i + 1 < n; ++i)
    for (int j = 0; j < n; ++j)
      w.xface[static_cast<std::size_t>(i) * n + j] =
          maxwellian_value({-g.L + (i + 1) * h, g.coord(j)});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j + 1 < n; ++j)
      w.yface[static_cast<std::size_t>(i) * (n - 1) + j] =
          maxwellian_value({g.coord(i), -g.L + (j + 1) * h});
  return w;
}

// Flux (integrated-by-parts) form of A*A + C*C: weighted-symmetric positive
// semidefinite with kernel the constants.
void apply_quadratic_operator(const VelocityGrid& g, const Weights& w,
                              const std::vector<double>& u, std::vector<double>& out) {
  const int n = g.n;
  const double h = g.h();
  std::fill(out.begin(), out.end(), 0.0);
  for (int i = 0; i + 1 < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double flux =
          3.0 * w.xface[static_cast<std::size_t>(i) * n + j] *
          (u[id2(g, i + 1, j)] - u[id2(g, i, j)]) / h;
      out[id2(g, i, j)] -= flux / h;
      out[id2(g, i + 1, j)] += flux / h;
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j + 1 < n; ++j) {
      const double flux =
          4.0 * w.yface[static_cast<std::size_t>(i) * (n - 1) + j] *
          (u[id2(g, i, j + 1)] - u[id2(g, i, j)]) / h;
      out[id2(g, i, j)] -= flux / h;
      out[id2(g, i, j + 1)] += flux / h;
    }
  // the loop accumulates -div(flux), which is the quadratic form times the
  // cell weight already
  for (std::size_t k = 0; k < out.size(); ++k) out[k] /= w.cell[k];
}

// Same flux structure for A*A alone (coefficient 4, y-direction).
void apply_AstarA(const VelocityGrid& g, const Weights& w, const std::vector<double>& u,
                  std::vector<double>& out) {
  const int n = g.n;
  const double h = g.h();
  std::fill(out.begin(), out.end(), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j + 1 < n; ++j) {
      const double flux =
          4.0 * w.yface[static_cast<std::size_t>(i) * (n - 1) + j] *
          (u[id2(g, i, j + 1)] - u[id2(g, i, j)]) / h;
      out[id2(g, i, j)] -= flux / h;
      out[id2(g, i, j + 1)] += flux / h;
    }
  for (std::size_t k = 0; k < out.size(); ++k) out[k] /= w.cell[k];
}

void deflate_mean(const VelocityGrid& g, const Weights& w, std::vector<double>& u) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    num += u[k] * w.cell[k];
    den += w.cell[k];
  }
  const double mean = num / den;
  for (double& x : u) x -= mean;
  (void)g;
}

} // namespace

std::vector<double> apply_A(const VelocityGrid& g, const std::vector<double>& u) {
  std::vector<double> out(u.size());
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) out[id2(g, i, j)] = 2.0 * d2(g, u, i, j);
  return out;
}

std::vector<double> apply_B(const VelocityGrid& g, const std::vector<double>& u) {
  std::vector<double> out(u.size());
  for (int i = 0; i < g.n; ++i) {
    const double p1 = g.coord(i);
    for (int j = 0; j < g.n; ++j) {
      const double p2 = g.coord(j);
      out[id2(g, i, j)] = -(kSqrt3 / 2.0) * (p2 * d1(g, u, i, j) - p1 * d2(g, u, i, j));
    }
  }
  return out;
}

std::vector<double> apply_C_exact(const VelocityGrid& g, const std::vector<double>& u) {
  std::vector<double> out(u.size());
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) out[id2(g, i, j)] = -kSqrt3 * d1(g, u, i, j);
  return out;
}

double weighted_dot(const VelocityGrid& g, const std::vector<double>& u,
                    const std::vector<double>& v) {
  if (u.size() != g.cells() || v.size() != g.cells())
    throw std::invalid_argument("weighted_dot: size mismatch");
  const double h2 = g.h() * g.h();
  double s = 0.0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      const std::size_t k = id2(g, i, j);
      s += u[k] * v[k] * maxwellian_value({g.coord(i), g.coord(j)});
    }
  return s * h2;
}

std::vector<CommutatorCheck> commutator_orders(const std::vector<int>& grid_sizes, double L) {
  struct Probe {
    std::function<double(double, double)> u;
    std::function<double(double, double)> cu; // analytic -sqrt3 d1 u
  };
  const std::vector<Probe> probes = {
      {[](double x, double) { return x * x * x; },
       [](double x, double) { return -kSqrt3 * 3.0 * x * x; }},
      {[](double x, double y) { return x * y; }, [](double, double y) { return -kSqrt3 * y; }},
      {[](double, double y) { return y * y * y; }, [](double, double) { return 0.0; }},
      {[](double x, double y) { return x * x * y; },
       [](double x, double y) { return -kSqrt3 * 2.0 * x * y; }},
  };

  std::vector<CommutatorCheck> checks;
  for (int n : grid_sizes) {
    const VelocityGrid g(n, L);
    double worst = 0.0;
    for (const Probe& pr : probes) {
      std::vector<double> u(g.cells());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) u[id2(g, i, j)] = pr.u(g.coord(i), g.coord(j));
      const std::vector<double> ab = apply_A(g, apply_B(g, u));
      const std::vector<double> ba = apply_B(g, apply_A(g, u));
      for (int i = 2; i < n - 2; ++i)
        for (int j = 2; j < n - 2; ++j) {
          const std::size_t k = id2(g, i, j);
          const double err = std::abs(ab[k] - ba[k] - pr.cu(g.coord(i), g.coord(j)));
          worst = std::max(worst, err);
        }
    }
    checks.push_back({g.h(), worst});
  }
  return checks;
}

double rayleigh_kappa(int n, double L, int power_iters) {
  if (n < 64) throw std::invalid_argument("rayleigh_kappa: need n >= 64");
  const VelocityGrid g(n, L);
  const Weights w = make_weights(g);

  const auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k] * w.cell[k];
    return s * g.h() * g.h();
  };
  const auto apply_K = [&](const std::vector<double>& x, std::vector<double>& out) {
    apply_quadratic_operator(g, w, x, out);
  };

  // Conjugate gradients on the weighted-mean-zero subspace, which the
  // operator preserves.
  const auto cg_solve = [&](const std::vector<double>& b, std::vector<double>& x) {
    std::vector<double> rvec = b, p = b, kp(b.size());
    std::fill(x.begin(), x.end(), 0.0);
    double rr = dot(rvec, rvec);
    const double rr0 = rr;
    for (int it = 0; it < 20 * n && rr > 1e-20 * rr0; ++it) {
      apply_K(p, kp);
      deflate_mean(g, w, kp);
      const double alpha = rr / dot(p, kp);
      for (std::size_t k = 0; k < x.size(); ++k) {
        x[k] += alpha * p[k];
        rvec[k] -= alpha * kp[k];
      }
      const double rr_new = dot(rvec, rvec);
      const double beta = rr_new / rr;
      for (std::size_t k = 0; k < p.size(); ++k) p[k] = rvec[k] + beta * p[k];
      rr = rr_new;
    }
  };

  // Deterministic start with overlap on the low modes.
  std::vector<double> u(g.cells());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      u[id2(g, i, j)] = g.coord(i) + 0.37 * g.coord(j) + 0.11 * g.coord(i) * g.coord(j);
  deflate_mean(g, w, u);

  std::vector<double> x(u.size()), ku(u.size());
  for (int it = 0; it < power_iters; ++it) {
    cg_solve(u, x);
    deflate_mean(g, w, x);
    const double nx = std::sqrt(dot(x, x));
    if (!(nx > 0.0)) throw StepFailure("rayleigh_kappa: inverse iteration collapsed");
    for (std::size_t k = 0; k < x.size(); ++k) x[k] /= nx;
    u = x;
  }
  apply_K(u, ku);
  return dot(ku, u) / dot(u, u);
}

DecayResult autonomous_decay_run(int n, double L, double s_end) {
  const VelocityGrid g(n, L);
  const Weights w = make_weights(g);

  std::vector<double> u(g.cells());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) u[id2(g, i, j)] = g.coord(i);

  const double h = g.h();
  const double ratio = std::exp(1.4142135623730951 * L * h / 4.0 + h * h / 16.0);
  const double lam_diff = 16.0 / (h * h) * ratio;
  const double lam_adv = kSqrt3 * 1.4142135623730951 * L / h;
  const double dt = 1.0 / (lam_diff + lam_adv);

  const auto rhs = [&](const std::vector<double>& v, std::vector<double>& out) {
    apply_AstarA(g, w, v, out);
    const std::vector<double> bv = apply_B(g, v);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = -(out[k] + bv[k]);
  };

  const auto h1_norm = [&](const std::vector<double>& v) {
    double s0 = 0.0;
    const double h2 = h * h;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const std::size_t k = id2(g, i, j);
        const double g1 = d1(g, v, i, j);
        const double g2 = d2(g, v, i, j);
        s0 += (v[k] * v[k] + g1 * g1 + g2 * g2) * w.cell[k];
      }
    return std::sqrt(s0 * h2);
  };

  DecayResult res;
  res.s.push_back(0.0);
  res.h1_norm.push_back(h1_norm(u));

  const double rec_ds = 0.05;
  std::vector<double> k1(u.size()), u1(u.size()), u2(u.size()), k2(u.size()), k3(u.size());
  double s = 0.0;
  double next_rec = rec_ds;
  while (s < s_end - 1e-12) {
    const double step_dt = std::min(dt, s_end - s);
    rhs(u, k1);
    for (std::size_t k = 0; k < u.size(); ++k) u1[k] = u[k] + step_dt * k1[k];
    rhs(u1, k2);
    for (std::size_t k = 0; k < u.size(); ++k)
      u2[k] = 0.75 * u[k] + 0.25 * (u1[k] + step_dt * k2[k]);
    rhs(u2, k3);
    for (std::size_t k = 0; k < u.size(); ++k)
      u[k] = (1.0 / 3.0) * u[k] + (2.0 / 3.0) * (u2[k] + step_dt * k3[k]);
    s += step_dt;
    if (s >= next_rec || s >= s_end - 1e-12) {
      res.s.push_back(s);
      res.h1_norm.push_back(h1_norm(u));
      while (next_rec <= s) next_rec += rec_ds;
    }
  }

  // Exponential fit over the trailing half of the record.
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < res.s.size(); ++k) {
    if (res.s[k] < 0.5 * s_end) continue;
    if (res.h1_norm[k] <= 0.0) continue;
    xs.push_back(res.s[k]);
    ys.push_back(std::log(res.h1_norm[k]));
  }
  if (xs.size() < 8) throw InsufficientData("autonomous_decay_run: too few record points");
  double sx = 0, sy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sx += xs[k];
    sy += ys[k];
  }
  const double mx = sx / xs.size(), my = sy / ys.size();
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  res.fitted_lambda = -sxy / sxx;
  return res;
}

} // namespace shearflow::fp
