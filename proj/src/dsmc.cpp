#include "shearflow/dsmc.hpp"

#include "shearflow/errors.hpp"
#include "shearflow/grid.hpp"
#include "shearflow/shape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace shearflow::dsmc {

namespace {

constexpr double kPi = std::numbers::pi;

void require_size(std::size_t N) {
  if (N < 1000) throw std::invalid_argument("ensemble sampler: need N >= 1000");
}

double max_speed(const ParticleEnsemble& ens) {
  double m2 = 0.0;
  for (const Vec2& w : ens.w) m2 = std::max(m2, w.norm2());
  return std::sqrt(m2);
}

} // namespace

ParticleEnsemble sample_maxwellian(std::size_t N, double theta, CounterRng& rng) {
  require_size(N);
  if (!(theta > 0.0)) throw std::invalid_argument("sample_maxwellian: theta must be positive");
  ParticleEnsemble ens;
  ens.w.reserve(N);
  const double s = std::sqrt(theta);
  for (std::size_t k = 0; k < N; ++k) {
    const auto [g1, g2] = rng.gaussian_pair();
    ens.w.push_back({s * g1, s * g2});
  }
  return ens;
}

ParticleEnsemble sample_two_bump(std::size_t N, const Vec2& d, double sigma2, CounterRng& rng,
                                 double w1) {
  require_size(N);
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sample_two_bump: sigma2 must be positive");
  if (!(w1 >= 0.0 && w1 <= 1.0)) throw std::invalid_argument("sample_two_bump: w1 in [0,1]");
  ParticleEnsemble ens;
  ens.w.reserve(N);
  const double s = std::sqrt(sigma2);
  for (std::size_t k = 0; k < N; ++k) {
    const double u = rng.uniform();
    const Vec2 center = (u < w1) ? d : -d;
    const auto [g1, g2] = rng.gaussian_pair();
    ens.w.push_back(center + Vec2{s * g1, s * g2});
  }
  return ens;
}

SymTensor2 empirical_stress(const ParticleEnsemble& ens) {
  if (ens.w.empty()) throw std::invalid_argument("empirical_stress: empty ensemble");
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const Vec2& w : ens.w) {
    sxx += w.x * w.x;
    sxy += w.x * w.y;
    syy += w.y * w.y;
  }
  const double c = 0.5 * ens.weight();
  return {c * sxx, c * sxy, c * syy};
}

double temperature(const ParticleEnsemble& ens) { return empirical_stress(ens).trace(); }

SymTensor2 update_frame(const ParticleEnsemble& ens) {
  return sym_inv_sqrt(empirical_stress(ens));
}

void drift_step(ParticleEnsemble& ens, const ShearFrame& frame, double dt) {
  const Mat2 M = Mat2::identity() - frame.shear_matrix() * (frame.mu * dt);
  for (Vec2& w : ens.w) w = M * w;
  ens.t += dt;
}

CollideStats collide_step(ParticleEnsemble& ens, double dt, double majorant, double* carry,
                          CounterRng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("collide_step: dt must be positive");
  if (majorant < 0.0) throw std::invalid_argument("collide_step: negative majorant");
  if (carry == nullptr) throw std::invalid_argument("collide_step: null carry");
  CollideStats stats;
  const std::size_t N = ens.size();
  if (N < 2) return stats;

  const double expected =
      kPi * ens.mass * majorant * static_cast<double>(N - 1) * dt + *carry;
  const long n_cand = static_cast<long>(std::floor(expected));
  *carry = expected - static_cast<double>(n_cand);

  for (long c = 0; c < n_cand; ++c) {
    // Fixed four-draw budget per candidate keeps the stream position a pure
    // function of the candidate count.
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    const double u3 = rng.uniform();
    const double u4 = rng.uniform();
    ++stats.candidates;

    const std::size_t i = std::min<std::size_t>(N - 1, static_cast<std::size_t>(u1 * N));
    const std::size_t j =
        (i + 1 + static_cast<std::size_t>(u2 * static_cast<double>(N - 1))) % N;
    const double phi = 2.0 * kPi * u3;
    const Vec2 nu{std::cos(phi), std::sin(phi)};
    const Vec2 rel = ens.w[i] - ens.w[j];
    const double rate = std::max(0.0, rel.dot(nu));
    if (rate > majorant)
      throw MajorantExceeded("collide_step: candidate rate above majorant");
    if (u4 * majorant < rate) {
      const Vec2 q = nu * rel.dot(nu);
      const Vec2 mom_before = ens.w[i] + ens.w[j];
      const double en_before = ens.w[i].norm2() + ens.w[j].norm2();
      ens.w[i] -= q;
      ens.w[j] += q;
      const Vec2 mom_after = ens.w[i] + ens.w[j];
      const double en_after = ens.w[i].norm2() + ens.w[j].norm2();
      stats.max_momentum_defect =
          std::max(stats.max_momentum_defect, (mom_after - mom_before).norm());
      stats.max_energy_defect =
          std::max(stats.max_energy_defect, std::abs(en_after - en_before));
      ++stats.accepted;
    }
  }
  return stats;
}

DsmcResult run(ParticleEnsemble ens, const ShearFrame& frame, double t_end, double dt,
               const CollisionConfig& cfg, CounterRng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("dsmc::run: dt must be positive");
  if (!(t_end > ens.t)) throw std::invalid_argument("dsmc::run: t_end must exceed ens.t");
  if (ens.size() < 2) throw std::invalid_argument("dsmc::run: need at least two particles");

  DsmcResult res;
  double carry = 0.0;
  res.series.t.push_back(ens.t);
  res.series.theta.push_back(temperature(ens));
  res.series.collisions.push_back(0);

  while (ens.t < t_end - 1e-12 * std::max(1.0, t_end)) {
    const double step_dt = std::min(dt, t_end - ens.t);
    const std::vector<Vec2> w_snapshot = ens.w;
    const double t_snapshot = ens.t;
    const double carry_snapshot = carry;

    double majorant = 0.0;
    for (int attempt = 0;; ++attempt) {
      try {
        drift_step(ens, frame, step_dt);
        if (attempt == 0) majorant = cfg.majorant_headroom * 2.0 * max_speed(ens);
        const CollideStats st = collide_step(ens, step_dt, majorant, &carry, rng);
        res.total_candidates += st.candidates;
        res.total_collisions += st.accepted;
        res.max_momentum_defect = std::max(res.max_momentum_defect, st.max_momentum_defect);
        res.max_energy_defect = std::max(res.max_energy_defect, st.max_energy_defect);
        break;
      } catch (const MajorantExceeded&) {
        ens.w = w_snapshot;
        ens.t = t_snapshot;
        carry = carry_snapshot;
        majorant *= cfg.refresh_factor;
        ++res.majorant_refreshes;
        if (attempt + 1 >= cfg.max_retries)
          throw StepFailure("dsmc::run: majorant retries exhausted");
      }
    }

    res.series.t.push_back(ens.t);
    res.series.theta.push_back(temperature(ens));
    res.series.collisions.push_back(res.total_collisions);
  }

  res.final_ensemble = std::move(ens);
  return res;
}

Mat2 energy_defect_tensor(const SymTensor2& eta, const Vec2& nu) {
  const SymTensor2 eta_inv = eta.inverse();
  const Vec2 a = eta_inv * nu;
  const Vec2 b = eta * nu;
  const double s = nu.dot(eta * (eta * nu));
  const Mat2 raw = Mat2::outer(a, a) * s - Mat2::outer(b, a);
  return raw.sym();
}

std::pair<double, double> stress_rate_trace(const ParticleEnsemble& ens, const SymTensor2& eta,
                                            std::size_t mc_pairs, CounterRng& rng) {
  if (mc_pairs == 0) throw std::invalid_argument("stress_rate_trace: mc_pairs must be positive");
  if (ens.size() < 2) throw std::invalid_argument("stress_rate_trace: need two particles");
  const std::size_t N = ens.size();
  const SymTensor2 eta_inv = eta.inverse();

  std::vector<Vec2> p(N);
  for (std::size_t k = 0; k < N; ++k) p[k] = eta * ens.w[k];

  double sum = 0.0, sumsq = 0.0;
  for (std::size_t k = 0; k < mc_pairs; ++k) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    const double u3 = rng.uniform();
    const std::size_t i = std::min<std::size_t>(N - 1, static_cast<std::size_t>(u1 * N));
    const std::size_t j = std::min<std::size_t>(N - 1, static_cast<std::size_t>(u2 * N));
    const double phi = 2.0 * kPi * u3;
    const Vec2 nu{std::cos(phi), std::sin(phi)};
    const Vec2 q = p[i] - p[j];
    const Mat2 C = energy_defect_tensor(eta, nu);
    const double rate = std::max(0.0, nu.dot(eta_inv * q));
    const double x = q.dot(C * q) * rate;
    sum += x;
    sumsq += x * x;
  }
  const double K = static_cast<double>(mc_pairs);
  const double mean = sum / K;
  const double var = std::max(0.0, sumsq / K - mean * mean);
  const double scale = 0.25 * ens.mass * ens.mass * 2.0 * kPi;
  return {scale * mean, scale * std::sqrt(var / K)};
}

MaxwellianResidual maxwellian_residual_check(double mu, int grid_n, double grid_l,
                                             int n_angles) {
  if (grid_n < 32 || grid_n % 2 != 0)
    throw std::invalid_argument("maxwellian_residual_check: grid_n must be even and >= 32");
  if (n_angles < 4) throw std::invalid_argument("maxwellian_residual_check: n_angles >= 4");

  const auto residual_sup = [&](int n) {
    const fp::VelocityGrid g(n, grid_l);
    const fp::DensityField G = fp::maxwellian(g);
    const double h = g.h();
    const double w_angle = 2.0 * kPi / n_angles;
    std::vector<double> cs(n_angles), sn(n_angles);
    for (int a = 0; a < n_angles; ++a) {
      const double phi = 2.0 * kPi * (a + 0.5) / n_angles;
      cs[a] = std::cos(phi);
      sn[a] = std::sin(phi);
    }
    const int stride = std::max(1, n / 16);
    double sup = 0.0;
    for (int i = 0; i < n; i += stride)
      for (int j = 0; j < n; j += stride) {
        const Vec2 p{g.coord(i), g.coord(j)};
        const double Gp = G.at(i, j);
        double acc = 0.0;
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            const Vec2 pp{g.coord(k), g.coord(l)};
            const double Gpp = G.at(k, l);
            const Vec2 rel = p - pp;
            for (int a = 0; a < n_angles; ++a) {
              const double proj = rel.x * cs[a] + rel.y * sn[a];
              if (proj <= 0.0) continue;
              const Vec2 shift{proj * cs[a], proj * sn[a]};
              const double gs = fp::sample_bilinear(G, p - shift);
              const double gps = fp::sample_bilinear(G, pp + shift);
              acc += proj * (gs * gps - Gp * Gpp);
            }
          }
        sup = std::max(sup, std::abs(acc) * w_angle * h * h);
      }
    return sup;
  };

  MaxwellianResidual out;
  out.collision_sup = residual_sup(grid_n);
  out.err_est = residual_sup(grid_n / 2);
  out.drift_sup = std::abs(mu) / (4.0 * kPi * std::numbers::e);
  return out;
}

EntropyProduction entropy_production_estimate(const ParticleEnsemble& ens,
                                              const SymTensor2& eta, int bins, double tr_F,
                                              int n_angles) {
  if (ens.size() < 2)
    throw std::invalid_argument("entropy_production_estimate: need two particles");
  if (n_angles < 4) throw std::invalid_argument("entropy_production_estimate: n_angles >= 4");
  const double L = 8.0;
  const fp::VelocityGrid g(bins, L); // enforces bins >= 16
  const double d = g.h();
  const double cell_area = d * d;
  const SymTensor2 eta_inv = eta.inverse();

  fp::DensityField hist(g), hist_a(g), hist_b(g);
  const double wpp = ens.weight() / cell_area;
  for (std::size_t k = 0; k < ens.size(); ++k) {
    const Vec2 p = eta * ens.w[k];
    const int i = static_cast<int>(std::floor((p.x + L) / d));
    const int j = static_cast<int>(std::floor((p.y + L) / d));
    if (i < 0 || i >= bins || j < 0 || j >= bins) continue;
    hist.at(i, j) += wpp;
    if (k % 2 == 0)
      hist_a.at(i, j) += 2.0 * wpp;
    else
      hist_b.at(i, j) += 2.0 * wpp;
  }

  std::vector<double> cs(n_angles), sn(n_angles);
  for (int a = 0; a < n_angles; ++a) {
    const double phi = 2.0 * kPi * (a + 0.5) / n_angles;
    cs[a] = std::cos(phi);
    sn[a] = std::sin(phi);
  }
  const double w_angle = 2.0 * kPi / n_angles;

  EntropyProduction out;
  out.tr_F = tr_F;
  double quartic = 0.0, cross = 0.0;
  for (int i1 = 0; i1 < bins; ++i1)
    for (int j1 = 0; j1 < bins; ++j1) {
      const Vec2 pc{g.coord(i1), g.coord(j1)};
      const double h1v = hist.at(i1, j1);
      const double ha1 = hist_a.at(i1, j1);
      const double hb1 = hist_b.at(i1, j1);
      for (int i2 = 0; i2 < bins; ++i2)
        for (int j2 = 0; j2 < bins; ++j2) {
          const Vec2 pcp{g.coord(i2), g.coord(j2)};
          const Vec2 q = pc - pcp;
          const Vec2 qw = eta_inv * q;
          for (int a = 0; a < n_angles; ++a) {
            const double proj = qw.x * cs[a] + qw.y * sn[a];
            if (proj <= 0.0) continue;
            const Vec2 nu{cs[a], sn[a]};
            const Vec2 shift = (eta * nu) * proj;
            const Vec2 pstar = pc - shift;
            const Vec2 ppstar = pcp + shift;
            const double prod = h1v * hist.at(i2, j2);
            const double prod_star =
                fp::sample_bilinear(hist, pstar) * fp::sample_bilinear(hist, ppstar);
            const double den = std::max(prod, prod_star);
            if (den <= 0.0) continue;
            const double w = proj * w_angle * cell_area * cell_area;
            const double delta = prod - prod_star;
            quartic -= 0.25 * delta * delta / den * w;
            const double da = ha1 * hist_a.at(i2, j2) -
                              fp::sample_bilinear(hist_a, pstar) *
                                  fp::sample_bilinear(hist_a, ppstar);
            const double db = hb1 * hist_b.at(i2, j2) -
                              fp::sample_bilinear(hist_b, pstar) *
                                  fp::sample_bilinear(hist_b, ppstar);
            cross -= 0.25 * da * db / den * w;
          }
        }
    }
  out.quartic = quartic;
  out.cross_estimate = cross;
  return out;
}

double chi_square_two_sample_pvalue(const std::vector<double>& speeds_a,
                                    const std::vector<double>& speeds_b, int bins) {
  if (speeds_a.empty() || speeds_b.empty())
    throw std::invalid_argument("chi_square_two_sample_pvalue: empty sample");
  if (bins < 2) throw std::invalid_argument("chi_square_two_sample_pvalue: bins >= 2");
  double lo = speeds_a[0], hi = speeds_a[0];
  for (double s : speeds_a) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  for (double s : speeds_b) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (!(hi > lo)) return 1.0;
  const double width = (hi - lo) / bins;
  std::vector<long> oa(bins, 0), ob(bins, 0);
  const auto bin_of = [&](double s) {
    return std::min<long>(bins - 1, static_cast<long>((s - lo) / width));
  };
  for (double s : speeds_a) ++oa[bin_of(s)];
  for (double s : speeds_b) ++ob[bin_of(s)];
  const double ka = static_cast<double>(speeds_a.size());
  const double kb = static_cast<double>(speeds_b.size());
  double chi2 = 0.0;
  int nonempty = 0;
  for (int k = 0; k < bins; ++k) {
    const double tot = static_cast<double>(oa[k] + ob[k]);
    if (tot <= 0.0) continue;
    ++nonempty;
    const double diff = kb * oa[k] - ka * ob[k];
    chi2 += diff * diff / tot;
  }
  chi2 /= ka * kb;
  const int dof = nonempty - 1;
  if (dof <= 0) return 1.0;
  return gamma_q(0.5 * dof, 0.5 * chi2);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("gamma_q: need a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // Series for P(a, x); Q = 1 - P.
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 1000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    const double p = sum * std::exp(-x + a * std::log(x) - lg);
    return std::clamp(1.0 - p, 0.0, 1.0);
  }
  // Modified Lentz continued fraction for Q directly.
  double b = x + 1.0 - a;
  double c = 1.0 / 1e-300;
  double dd = 1.0 / b;
  double h = dd;
  for (int i = 1; i < 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    dd = an * dd + b;
    if (std::abs(dd) < 1e-300) dd = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    dd = 1.0 / dd;
    const double del = dd * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::clamp(std::exp(-x + a * std::log(x) - lg) * h, 0.0, 1.0);
}

void write_ensemble(const ParticleEnsemble& ens, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_ensemble: cannot open " + path.string());
  const std::uint64_t n = ens.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&ens.t), sizeof ens.t);
  for (const Vec2& w : ens.w) {
    out.write(reinterpret_cast<const char*>(&w.x), sizeof w.x);
    out.write(reinterpret_cast<const char*>(&w.y), sizeof w.y);
  }
  if (!out) throw std::runtime_error("write_ensemble: write failed for " + path.string());
}

ParticleEnsemble read_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_ensemble: cannot open " + path.string());
  std::uint64_t n = 0;
  ParticleEnsemble ens;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&ens.t), sizeof ens.t);
  if (!in || n == 0 || n > (1ull << 32))
    throw std::runtime_error("read_ensemble: corrupt header in " + path.string());
  ens.w.resize(n);
  for (Vec2& w : ens.w) {
    in.read(reinterpret_cast<char*>(&w.x), sizeof w.x);
    in.read(reinterpret_cast<char*>(&w.y), sizeof w.y);
  }
  if (!in) throw std::runtime_error("read_ensemble: truncated body in " + path.string());
  return ens;
}

} // namespace shearflow::dsmc
