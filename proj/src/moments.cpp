#include "shearflow/moments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "shearflow/ode.hpp"

namespace shearflow::moments {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

// Components of an ambient tensor in the (alpha, beta) basis and back.
SymTensor2 to_frame(const SymTensor2& T, const ShearFrame& fr) {
  return {fr.alpha.dot(T * fr.alpha), fr.alpha.dot(T * fr.beta), fr.beta.dot(T * fr.beta)};
}

SymTensor2 from_frame(const SymTensor2& Tf, const ShearFrame& fr) {
  const Mat2 aa = Mat2::outer(fr.alpha, fr.alpha);
  const Mat2 ab = Mat2::outer(fr.alpha, fr.beta);
  const Mat2 ba = Mat2::outer(fr.beta, fr.alpha);
  const Mat2 bb = Mat2::outer(fr.beta, fr.beta);
  const Mat2 m = Tf.xx * aa + Tf.xy * (ab + ba) + Tf.yy * bb;
  return sym_part(m);
}

Mat2 mat_to_frame(const Mat2& F, const ShearFrame& fr) {
  return {fr.alpha.dot(F * fr.alpha), fr.alpha.dot(F * fr.beta), fr.beta.dot(F * fr.alpha),
          fr.beta.dot(F * fr.beta)};
}

void require_positive(const SymTensor2& T, const char* where) {
  if (!(T.trace() > 0.0) || !(T.det() > 0.0))
    throw DegenerateStress(std::string(where) + ": stress lost positive definiteness");
}

// Least-squares line through (x, y); slope/intercept/R^2.
struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
  std::size_t n = 0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  f.n = x.size();
  if (f.n < 8) throw InsufficientData("fit_line: fewer than 8 points");
  double sx = 0, sy = 0;
  for (std::size_t k = 0; k < f.n; ++k) {
    sx += x[k];
    sy += y[k];
  }
  const double mx = sx / static_cast<double>(f.n);
  const double my = sy / static_cast<double>(f.n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < f.n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double ssres = syy - f.slope * sxy;
  f.r2 = (syy > 0.0) ? 1.0 - ssres / syy : 1.0;
  return f;
}

constexpr double kLogSwitchTime = 100.0;

} // namespace

SymTensor2 stress_rhs(const SymTensor2& T, const ShearFrame& frame) {
  const double theta = T.trace();
  if (!(theta > 0.0)) throw DegenerateStress("stress_rhs: non-positive trace");
  const Mat2 ST = frame.shear_matrix() * T.mat();
  const SymTensor2 sym2ST = sym_part(ST + ST.transpose());
  return SymTensor2::identity() - frame.mu * sym2ST - (2.0 / theta) * T;
}

std::array<std::array<double, 3>, 3> matrix_M(double mu) {
  return {{{-3.0, -2.0 * mu, 0.0}, {0.0, -2.0, -mu}, {0.0, 0.0, -1.0}}};
}

RescaledABC abc_limit(double mu) { return {mu * mu / 3.0, -mu / 2.0, 1.0}; }

std::size_t StressTrajectory::node_before(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0;
  return static_cast<std::size_t>(std::distance(times.begin(), it)) - 1;
}

StressTrajectory integrate_stress(const SymTensor2& T0, const ShearFrame& frame, double t_end,
                                  double tol) {
  {
    // Fails with NotPositiveDefinite when T0 is degenerate.
    (void)sym_inv_sqrt(T0);
  }
  if (!(t_end > 0.0)) throw std::invalid_argument("integrate_stress: t_end must be positive");

  StressTrajectory traj{frame, tol, {}, {}};
  ode::DormandPrince<3> dp;
  dp.rtol = tol;
  dp.atol = tol * 1e-3;

  const auto store = [&traj](double t, const SymTensor2& T) {
    require_positive(T, "integrate_stress");
    if (!traj.times.empty() && t <= traj.times.back() + 1e-15 * std::max(1.0, t)) return;
    traj.times.push_back(t);
    traj.stress.push_back(T);
  };

  // Phase 1: the stress components in plain time up to the log switch.
  const double t_plain = std::min(t_end, kLogSwitchTime);
  {
    std::array<double, 3> y{T0.xx, T0.xy, T0.yy};
    const auto rhs = [&frame](double, const std::array<double, 3>& s, std::array<double, 3>& d) {
      const SymTensor2 r = stress_rhs({s[0], s[1], s[2]}, frame);
      d = {r.xx, r.xy, r.yy};
    };
    const auto obs = [&store](double t, const std::array<double, 3>& s) {
      store(t, {s[0], s[1], s[2]});
    };
    dp.integrate(rhs, 0.0, t_plain, y, obs);
  }

  // Phase 2: the rescaled components (a, b, c) in s = log t, which keeps the
  // step count logarithmic in the horizon.
  if (t_end > kLogSwitchTime) {
    const SymTensor2 Tf = to_frame(traj.stress.back(), frame);
    const double ts = traj.times.back();
    std::array<double, 3> y{Tf.xx / (ts * ts * ts), Tf.xy / (ts * ts), Tf.yy / ts};
    const double mu = frame.mu;
    const auto rhs = [mu](double s, const std::array<double, 3>& v, std::array<double, 3>& d) {
      const double a = v[0], b = v[1], c = v[2];
      const double e2s = std::exp(2.0 * s);
      const double denom = e2s * a + c; // theta / t
      if (!(denom > 0.0)) throw DegenerateStress("integrate_stress: non-positive trace");
      d[0] = -3.0 * a - 2.0 * mu * b + std::exp(-2.0 * s) - 2.0 * a / denom;
      d[1] = -2.0 * b - mu * c - 2.0 * b / denom;
      d[2] = -c + 1.0 - 2.0 * c / denom;
    };
    const auto obs = [&store, &frame](double s, const std::array<double, 3>& v) {
      const double t = std::exp(s);
      const SymTensor2 Tf2{v[0] * t * t * t, v[1] * t * t, v[2] * t};
      store(t, from_frame(Tf2, frame));
    };
    dp.integrate(rhs, std::log(ts), std::log(t_end), y, obs);
    // Land the final node exactly on t_end (exp(log t_end) rounding).
    traj.times.back() = t_end;
  }

  return traj;
}

CoefficientFrame frame_from_stress(double t, const SymTensor2& T, const ShearFrame& frame) {
  CoefficientFrame cf;
  cf.t = t;
  cf.T = T;
  cf.theta = T.trace();
  require_positive(T, "frame_from_stress");
  cf.eta = sym_inv_sqrt(T);
  cf.eta2 = T.inverse();
  const SymTensor2 Tdot = stress_rhs(T, frame);
  const SymTensor2 etadot = sym_sqrt_derivative(T, Tdot);
  const Mat2 eta_inv = sym_sqrt(T).mat();
  cf.F = etadot.mat() * eta_inv - frame.mu * (cf.eta.mat() * frame.shear_matrix() * eta_inv);
  if (frame_identity_residual(cf) > 1e-8)
    throw DegenerateStress("frame_from_stress: coefficient identity residual above 1e-8");
  return cf;
}

double frame_identity_residual(const CoefficientFrame& cf) {
  const Mat2 r = cf.F + cf.F.transpose() + cf.eta2.mat() - (2.0 / cf.theta) * Mat2::identity();
  return r.frobenius();
}

CoefficientFrame coefficient_frame(const StressTrajectory& traj, double t) {
  const double lo = traj.t_begin();
  const double hi = traj.t_end();
  const double eps = 1e-12 * std::max(1.0, hi);
  if (t < lo - eps || t > hi + eps)
    throw std::out_of_range("coefficient_frame: time outside the trajectory span");
  t = std::clamp(t, lo, hi);

  const std::size_t k = traj.node_before(t);
  SymTensor2 T = traj.stress[k];
  const double tk = traj.times[k];
  if (t > tk + 1e-14 * std::max(1.0, t)) {
    ode::DormandPrince<3> dp;
    dp.rtol = 1e-12;
    dp.atol = 1e-14;
    std::array<double, 3> y{T.xx, T.xy, T.yy};
    const ShearFrame fr = traj.frame;
    const auto rhs = [&fr](double, const std::array<double, 3>& s, std::array<double, 3>& d) {
      const SymTensor2 r = stress_rhs({s[0], s[1], s[2]}, fr);
      d = {r.xx, r.xy, r.yy};
    };
    dp.integrate(rhs, tk, t, y);
    T = {y[0], y[1], y[2]};
  }
  return frame_from_stress(t, T, traj.frame);
}

std::array<std::array<double, 5>, 5> matrix_N4() {
  const double s = kSqrt3;
  return {{{0.0, 2.0 * s, 0.0, 0.0, 0.0},
           {-s / 2.0, -2.0, 1.5 * s, 0.0, 0.0},
           {0.0, -s, -4.0, s, 0.0},
           {0.0, 0.0, -1.5 * s, -6.0, s / 2.0},
           {0.0, 0.0, 0.0, -2.0 * s, -8.0}}};
}

double general_N_entry(int i, int j, int k, int l) {
  if (i < 0 || j < 0 || k < 0 || l < 0)
    throw IndexRangeError("general_N_entry: negative moment index");
  const int ro = i + j;
  const int co = k + l;
  if (ro != 4 && ro != 6)
    throw IndexRangeError("general_N_entry: row order " + std::to_string(ro) +
                          " outside {4, 6}");
  if (co != 4 && co != 6)
    throw IndexRangeError("general_N_entry: column order " + std::to_string(co) +
                          " outside {4, 6}");
  const bool same_order = (ro == co);
  const bool diffusion_shift = (k == i && l == j - 2);
  if (!same_order && !diffusion_shift)
    throw IndexRangeError("general_N_entry: (" + std::to_string(k) + "," + std::to_string(l) +
                          ") is not coupled to (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
  if (same_order) {
    if (k == i && l == j) return -2.0 * j;
    if (k == i + 1 && l == j - 1) return -(kSqrt3 / 2.0) * j;
    if (k == i - 1 && l == j + 1) return (kSqrt3 / 2.0) * i;
    return 0.0;
  }
  return 4.0 * static_cast<double>(j) * (j - 1);
}

double MomentVector::h4_norm() const {
  double s = 0.0;
  for (double v : h4) s += v * v;
  return std::sqrt(s);
}

double MomentVector::h6_norm() const {
  double s = 0.0;
  for (double v : h6) s += v * v;
  return std::sqrt(s);
}

namespace {

// Defect-moment right-hand side in the frame basis, for one block row
// (i, j).  Moments of order <= 2 vanish identically under the rescaling, so
// lookups below order 4 return zero; the order-6 block pulls the order-4
// block in through the diffusion terms.
struct MomentIndexer {
  const std::array<double, 5>& h4;
  const std::array<double, 7>& h6;

  double get(int i, int j) const {
    if (i < 0 || j < 0) return 0.0;
    const int o = i + j;
    if (o <= 2) return 0.0;
    if (o == 4) return h4[static_cast<std::size_t>(4 - i)];
    if (o == 6) return h6[static_cast<std::size_t>(6 - i)];
    return 0.0;
  }
};

double moment_rhs_entry(int i, int j, const MomentIndexer& m, double theta, const Mat2& F,
                        const SymTensor2& eta2) {
  const double fi = static_cast<double>(i);
  const double fj = static_cast<double>(j);
  double d = (-(fi + fj) / theta + fi * F.a11 + fj * F.a22) * m.get(i, j);
  d += fi * F.a12 * m.get(i - 1, j + 1);
  d += fj * F.a21 * m.get(i + 1, j - 1);
  d += fi * (fi - 1.0) * eta2.xx * m.get(i - 2, j);
  d += 2.0 * fi * fj * eta2.xy * m.get(i - 1, j - 1);
  d += fj * (fj - 1.0) * eta2.yy * m.get(i, j - 2);
  return d;
}

} // namespace

MomentSeries integrate_moments(const StressTrajectory& traj, const MomentVector& h0, double t0,
                               double t1, double tol) {
  if (!(t1 > t0)) throw std::invalid_argument("integrate_moments: need t1 > t0");
  const double eps = 1e-12 * std::max(1.0, traj.t_end());
  if (t0 < traj.t_begin() - eps || t1 > traj.t_end() + eps)
    throw std::out_of_range("integrate_moments: window outside the trajectory span");

  // State: stress components (3) + h4 (5) + h6 (7), co-integrated so the
  // moment coefficients see exactly the stress the trajectory defines.
  const SymTensor2 Tinit = coefficient_frame(traj, t0).T;
  std::array<double, 15> y{};
  y[0] = Tinit.xx;
  y[1] = Tinit.xy;
  y[2] = Tinit.yy;
  for (std::size_t k = 0; k < 5; ++k) y[3 + k] = h0.h4[k];
  for (std::size_t k = 0; k < 7; ++k) y[8 + k] = h0.h6[k];

  const ShearFrame fr = traj.frame;
  const auto rhs = [&fr](double t, const std::array<double, 15>& s, std::array<double, 15>& d) {
    const SymTensor2 T{s[0], s[1], s[2]};
    const CoefficientFrame cf = frame_from_stress(t, T, fr);
    const SymTensor2 Tdot = stress_rhs(T, fr);
    d[0] = Tdot.xx;
    d[1] = Tdot.xy;
    d[2] = Tdot.yy;
    const Mat2 Ff = mat_to_frame(cf.F, fr);
    const SymTensor2 e2f = to_frame(cf.eta2, fr);
    std::array<double, 5> h4{};
    std::array<double, 7> h6{};
    for (std::size_t k = 0; k < 5; ++k) h4[k] = s[3 + k];
    for (std::size_t k = 0; k < 7; ++k) h6[k] = s[8 + k];
    const MomentIndexer m{h4, h6};
    for (int k = 0; k < 5; ++k) d[3 + k] = moment_rhs_entry(4 - k, k, m, cf.theta, Ff, e2f);
    for (int k = 0; k < 7; ++k) d[8 + k] = moment_rhs_entry(6 - k, k, m, cf.theta, Ff, e2f);
  };

  MomentSeries series;
  const auto obs = [&series](double t, const std::array<double, 15>& s) {
    MomentVector v;
    for (std::size_t k = 0; k < 5; ++k) v.h4[k] = s[3 + k];
    for (std::size_t k = 0; k < 7; ++k) v.h6[k] = s[8 + k];
    series.times.push_back(t);
    series.h.push_back(v);
  };

  ode::DormandPrince<15> dp;
  dp.rtol = tol;
  dp.atol = tol * 1e-3;
  dp.integrate(rhs, t0, t1, y, obs);
  return series;
}

RateBound rate_lower_bound(const MomentSeries& series) {
  if (series.times.size() < 8) throw InsufficientData("rate_lower_bound: series too short");
  const double t_max = series.times.back();
  const double t_lo = t_max / 100.0; // trailing two decades
  std::vector<double> lt, l4, l6;
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    const double t = series.times[k];
    if (t < t_lo || t <= 0.0) continue;
    const double n4 = series.h[k].h4_norm();
    const double n6 = series.h[k].h6_norm();
    if (n4 <= 0.0 || n6 <= 0.0) continue;
    lt.push_back(std::log(t));
    l4.push_back(std::log(n4));
    l6.push_back(std::log(n6));
  }
  const LineFit f4 = fit_line(lt, l4);
  const LineFit f6 = fit_line(lt, l6);

  RateBound rb;
  rb.lambda_bar = -f4.slope; // decay exponent of |h4|, positive for decay
  rb.lambda_prime = f6.slope;
  rb.five_lambda_bar_plus_two_lambda_prime = 5.0 * rb.lambda_bar + 2.0 * rb.lambda_prime;
  const double ex = rb.lambda_bar + 0.5 * rb.lambda_prime;
  rb.R = [ex](double t) { return std::pow(t, ex); };
  return rb;
}

std::vector<AsymptoticsRow> asymptotics_table(const StressTrajectory& traj,
                                              std::vector<double> sample_times) {
  if (sample_times.empty()) {
    for (double t = 1.0; t <= traj.t_end() * (1.0 + 1e-12); t *= 10.0)
      if (t >= traj.t_begin()) sample_times.push_back(std::min(t, traj.t_end()));
  }
  const double mu = traj.frame.mu;
  std::vector<AsymptoticsRow> rows;
  rows.reserve(sample_times.size());
  for (double t : sample_times) {
    const CoefficientFrame cf = coefficient_frame(traj, t);
    const SymTensor2 Tf = to_frame(cf.T, traj.frame);
    const SymTensor2 ef = to_frame(cf.eta, traj.frame);
    const Mat2 Ff = mat_to_frame(cf.F, traj.frame);
    AsymptoticsRow r;
    r.t = t;
    r.txx_ratio = Tf.xx / (mu * mu * t * t * t / 3.0);
    r.txy_ratio = Tf.xy / (-mu * t * t / 2.0);
    r.tyy_ratio = Tf.yy / t;
    r.theta_ratio = cf.theta * 3.0 / (mu * mu * t * t * t);
    r.eta_xx_ratio = ef.xx * mu * std::pow(t, 1.5) / kSqrt3;
    r.eta_yy_ratio = ef.yy * std::sqrt(t) / 2.0;
    const Mat2 target{0.0, -kSqrt3, kSqrt3, -4.0}; // limit of 2 t F
    const Mat2 res = 2.0 * t * Ff - target;
    r.f_residual = res.frobenius();
    rows.push_back(r);
  }
  return rows;
}

} // namespace shearflow::moments
