#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shearflow/dsmc.hpp"
#include "shearflow/errors.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

using namespace shearflow;
using namespace shearflow::dsmc;

TEST_CASE("samplers produce the requested moments") {
  CounterRng rng(42);
  CHECK_THROWS_AS(sample_maxwellian(100, 2.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_maxwellian(2000, -1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_two_bump(2000, {1.0, 0.0}, 0.5, rng, 1.5), std::invalid_argument);

  const ParticleEnsemble eq = sample_maxwellian(20000, 2.0, rng);
  CHECK(eq.size() == 20000);
  CHECK(eq.weight() == doctest::Approx(1.0 / 20000.0));
  CHECK(temperature(eq) == doctest::Approx(2.0).epsilon(0.05));
  const SymTensor2 T = empirical_stress(eq);
  CHECK(T.xx == doctest::Approx(1.0).epsilon(0.05));
  CHECK(T.yy == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::abs(T.xy) < 0.05);

  const Vec2 d{1.2, 0.5};
  const ParticleEnsemble tb = sample_two_bump(20000, d, 0.5, rng);
  // temperature = sigma2 + |d|^2 / 2 for the symmetric mixture
  CHECK(temperature(tb) == doctest::Approx(0.5 + 0.5 * d.norm2()).epsilon(0.05));
}

TEST_CASE("update_frame rescales the empirical second moment to 2 Id exactly") {
  CounterRng rng(7);
  const ParticleEnsemble ens = sample_two_bump(5000, {1.0, 0.4}, 0.7, rng, 0.6);
  const SymTensor2 eta = update_frame(ens);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const Vec2& w : ens.w) {
    const Vec2 p = eta * w;
    sxx += p.x * p.x;
    sxy += p.x * p.y;
    syy += p.y * p.y;
  }
  const double c = ens.weight();
  CHECK(c * sxx == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(c * syy == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(c * sxy) < 1e-12);
}

TEST_CASE("drift is the exact nilpotent shear map") {
  const ShearFrame frame = ShearFrame::standard(1.5);
  ParticleEnsemble ens;
  ens.w = {{0.3, -0.8}, {2.0, 1.0}, {-1.1, 0.25}};

  ParticleEnsemble a = ens;
  drift_step(a, frame, 0.25);
  for (std::size_t k = 0; k < ens.size(); ++k) {
    CHECK(a.w[k].x == doctest::Approx(ens.w[k].x - 1.5 * 0.25 * ens.w[k].y).epsilon(1e-15));
    CHECK(a.w[k].y == ens.w[k].y); // beta-component untouched
  }
  CHECK(a.t == doctest::Approx(0.25));

  // nilpotent generator: two short drifts equal one long drift
  ParticleEnsemble b = ens;
  drift_step(b, frame, 0.25);
  drift_step(b, frame, 0.5);
  ParticleEnsemble c = ens;
  drift_step(c, frame, 0.75);
  for (std::size_t k = 0; k < ens.size(); ++k) {
    CHECK(b.w[k].x == doctest::Approx(c.w[k].x).epsilon(1e-14));
    CHECK(b.w[k].y == c.w[k].y);
  }
}

TEST_CASE("collide_step conserves momentum and energy and is counter-deterministic") {
  CounterRng rng(3);
  ParticleEnsemble ens = sample_maxwellian(2000, 2.0, rng);
  double carry = 0.0;
  CHECK_THROWS_AS(collide_step(ens, -0.1, 10.0, &carry, rng), std::invalid_argument);
  CHECK_THROWS_AS(collide_step(ens, 0.1, -1.0, &carry, rng), std::invalid_argument);
  CHECK_THROWS_AS(collide_step(ens, 0.1, 10.0, nullptr, rng), std::invalid_argument);

  const double majorant = 2.2 * 6.0; // comfortably above 2 max|w|
  const std::uint64_t c0 = rng.counter();

  ParticleEnsemble e1 = ens;
  double carry1 = 0.0;
  const CollideStats s1 = collide_step(e1, 0.05, majorant, &carry1, rng);
  CHECK(s1.candidates > 100);
  CHECK(s1.accepted > 10);
  CHECK(s1.accepted <= s1.candidates);
  CHECK(s1.max_momentum_defect < 1e-12);
  CHECK(s1.max_energy_defect < 1e-12);
  CHECK(carry1 >= 0.0);
  CHECK(carry1 < 1.0);

  // same counter, same ensemble: bitwise identical sweep
  rng.set_counter(c0);
  ParticleEnsemble e2 = ens;
  double carry2 = 0.0;
  const CollideStats s2 = collide_step(e2, 0.05, majorant, &carry2, rng);
  CHECK(s2.candidates == s1.candidates);
  CHECK(s2.accepted == s1.accepted);
  CHECK(carry2 == carry1);
  bool identical = true;
  for (std::size_t k = 0; k < e1.size(); ++k)
    identical = identical && e1.w[k].x == e2.w[k].x && e1.w[k].y == e2.w[k].y;
  CHECK(identical);

  // a majorant below the top relative speed must be rejected loudly
  double carry3 = 0.0;
  ParticleEnsemble e3 = ens;
  CHECK_THROWS_AS(collide_step(e3, 1.0, 0.05, &carry3, rng), MajorantExceeded);
}

TEST_CASE("run conserves invariants, obeys the heating bound, and reruns bitwise") {
  const ShearFrame frame = ShearFrame::standard(1.0);
  CounterRng seed_rng(11);
  const ParticleEnsemble init = sample_maxwellian(5000, 2.0, seed_rng);
  const CollisionConfig cfg;

  CounterRng r1(99);
  const DsmcResult res = run(init, frame, 0.5, 1e-3, cfg, r1);
  CHECK(res.total_candidates > 1000);
  CHECK(res.total_collisions > 100);
  CHECK(res.max_momentum_defect < 1e-12);
  CHECK(res.max_energy_defect < 1e-12);
  CHECK(res.final_ensemble.t == doctest::Approx(0.5).epsilon(1e-12));
  REQUIRE(res.series.t.size() >= 100);

  // shear heating: theta(t) <= exp(|mu| t) theta(0) with 5% slack
  const double th0 = res.series.theta.front();
  for (std::size_t k = 0; k < res.series.t.size(); ++k) {
    const double bound = th0 * std::exp(std::abs(frame.mu) * (res.series.t[k] - res.series.t.front()));
    CHECK(res.series.theta[k] <= bound * 1.05);
  }
  // the shear really does heat: final theta clearly above initial
  CHECK(res.series.theta.back() > th0 * 1.02);

  CounterRng r2(99);
  const DsmcResult rep = run(init, frame, 0.5, 1e-3, cfg, r2);
  CHECK(rep.total_collisions == res.total_collisions);
  bool identical = true;
  for (std::size_t k = 0; k < rep.final_ensemble.size(); ++k)
    identical = identical && rep.final_ensemble.w[k].x == res.final_ensemble.w[k].x &&
                rep.final_ensemble.w[k].y == res.final_ensemble.w[k].y;
  CHECK(identical);
}

TEST_CASE("mu = 0 run conserves temperature and the speed distribution") {
  const ShearFrame frame = ShearFrame::standard(0.0);
  CounterRng seed_rng(21);
  const ParticleEnsemble init = sample_maxwellian(5000, 2.0, seed_rng);

  CounterRng r(5);
  const DsmcResult res = run(init, frame, 0.5, 1e-3, CollisionConfig{}, r);
  CHECK(res.total_collisions > 100);
  const double th0 = res.series.theta.front();
  for (double th : res.series.theta)
    CHECK(std::abs(th - th0) < 1e-10 * th0);

  // collisions leave the equilibrium speed distribution invariant
  std::vector<double> before, after;
  for (const Vec2& w : init.w) before.push_back(w.norm());
  for (const Vec2& w : res.final_ensemble.w) after.push_back(w.norm());
  CHECK(chi_square_two_sample_pvalue(before, after) > 1e-3);
}

TEST_CASE("energy defect tensor matches its pins and the collision identity") {
  // eta = Id: the tensor vanishes identically
  CounterRng rng(13);
  for (int k = 0; k < 100; ++k) {
    const double phi = rng.uniform(0.0, 2.0 * std::acos(-1.0));
    const Mat2 C = energy_defect_tensor(SymTensor2::identity(), {std::cos(phi), std::sin(phi)});
    CHECK(C.frobenius() < 1e-15);
  }

  // pinned value at eta = diag(2,1), nu = (1,1)/sqrt2
  const double r = 1.0 / std::sqrt(2.0);
  const Mat2 C = energy_defect_tensor(SymTensor2{2.0, 0.0, 1.0}, {r, r});
  CHECK(C.a11 == doctest::Approx(-0.1875).epsilon(1e-12));
  CHECK(C.a22 == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(std::abs(C.a12) < 1e-14);
  CHECK(std::abs(C.a21) < 1e-14);

  // per-collision identity: Delta(|p|^2 + |p'|^2) = 2 q . C q
  const SymTensor2 eta{1.3, 0.4, 0.8};
  for (int k = 0; k < 200; ++k) {
    const Vec2 w{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    const Vec2 wp{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    const double phi = rng.uniform(0.0, 2.0 * std::acos(-1.0));
    const Vec2 nu{std::cos(phi), std::sin(phi)};
    const Vec2 jmp = nu * (w - wp).dot(nu);
    const Vec2 ws = w - jmp, wps = wp + jmp;
    const Vec2 p = eta * w, pp = eta * wp;
    const Vec2 ps = eta * ws, pps = eta * wps;
    const double delta = ps.norm2() + pps.norm2() - p.norm2() - pp.norm2();
    const Vec2 q = p - pp;
    const Mat2 Cn = energy_defect_tensor(eta, nu);
    CHECK(delta == doctest::Approx(2.0 * q.dot(Cn * q)).epsilon(1e-10));
  }
}

TEST_CASE("stress production trace matches the semi-analytic pin") {
  // Maxwellian in p (second moment 2 Id), particles stored as w = eta^{-1} p
  const SymTensor2 eta{2.0, 0.0, 1.0};
  const SymTensor2 eta_inv = eta.inverse();
  CounterRng rng(31);
  ParticleEnsemble ens = sample_maxwellian(10000, 2.0, rng);
  for (Vec2& w : ens.w) w = eta_inv * w;

  const auto [est, se] = stress_rate_trace(ens, eta, 100000, rng);
  CHECK(se > 0.0);
  CHECK(se < 0.05);
  CHECK(std::abs(est - 2.20268038292) < std::max(4.0 * se, 0.12));

  // eta = Id: the integrand vanishes to rounding (|nu|^2 = 1 up to one ulp)
  CounterRng rng2(32);
  ParticleEnsemble iso = sample_maxwellian(2000, 2.0, rng2);
  const auto [est0, se0] = stress_rate_trace(iso, SymTensor2::identity(), 5000, rng2);
  CHECK(std::abs(est0) < 1e-14);
  CHECK(se0 < 1e-14);
}

TEST_CASE("Maxwellian non-stationarity: drift residual dominates collision quadrature error") {
  CHECK_THROWS_AS(maxwellian_residual_check(1.0, 30), std::invalid_argument);
  CHECK_THROWS_AS(maxwellian_residual_check(1.0, 63), std::invalid_argument);

  const MaxwellianResidual res = maxwellian_residual_check(1.0, 64, 8.0, 16);
  // analytic drift residual sup = |mu| / (4 pi e)
  CHECK(res.drift_sup ==
        doctest::Approx(1.0 / (4.0 * std::acos(-1.0) * std::exp(1.0))).epsilon(1e-12));
  // the collision integral vanishes on the Maxwellian: the measured sup is
  // discretization error and shrinks under refinement
  CHECK(res.collision_sup < res.err_est);
  CHECK(res.drift_sup > 10.0 * res.collision_sup);
}

TEST_CASE("entropy production: split-half estimate separates signal from histogram noise") {
  CounterRng rng(2024);
  const ParticleEnsemble eq = sample_maxwellian(20000, 2.0, rng);
  const EntropyProduction ep_eq =
      entropy_production_estimate(eq, SymTensor2::identity(), 24, 0.0, 16);
  CHECK(ep_eq.quartic <= 0.0);
  CHECK(ep_eq.quartic > -0.1); // histogram noise floor at N = 2e4
  CHECK(std::abs(ep_eq.cross_estimate) < 0.3 * std::abs(ep_eq.quartic));
  CHECK(ep_eq.tr_F == 0.0);

  CounterRng rng2(2024);
  ParticleEnsemble tb = sample_two_bump(20000, {1.2, 0.5}, 0.5, rng2);
  const SymTensor2 eta = update_frame(tb);
  for (Vec2& w : tb.w) w = eta * w;
  const EntropyProduction ep_tb =
      entropy_production_estimate(tb, SymTensor2::identity(), 24, 0.7, 16);
  CHECK(ep_tb.quartic < -0.3);
  CHECK(ep_tb.cross_estimate / ep_tb.quartic > 0.7);
  CHECK(ep_tb.cross_estimate / ep_tb.quartic < 1.2);
  CHECK(ep_tb.tr_F == 0.7);
}

TEST_CASE("incomplete gamma and the two-sample test behave") {
  CHECK(gamma_q(0.5, 1.0) == doctest::Approx(0.15729920705028513).epsilon(1e-12));
  CHECK(gamma_q(1.0, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK(gamma_q(2.0, 10.0) == doctest::Approx(11.0 * std::exp(-10.0)).epsilon(1e-12));
  CHECK(gamma_q(3.0, 0.0) == 1.0);

  // identical histograms: chi-square is exactly zero, p = 1
  std::vector<double> a, b;
  for (int k = 0; k < 1000; ++k) a.push_back(0.5 + 1e-3 * k);
  CHECK(chi_square_two_sample_pvalue(a, a) == doctest::Approx(1.0));
  // disjoint supports: overwhelming rejection
  for (int k = 0; k < 1000; ++k) b.push_back(4.0 + 1e-3 * k);
  CHECK(chi_square_two_sample_pvalue(a, b) < 1e-6);
}

TEST_CASE("ensemble snapshots round-trip bitwise") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "shearflow_dsmc_io_test";
  fs::create_directories(dir);

  CounterRng rng(8);
  ParticleEnsemble ens = sample_maxwellian(2000, 2.0, rng);
  ens.t = 1.25;
  const fs::path file = dir / "ens.bin";
  write_ensemble(ens, file);
  const ParticleEnsemble back = read_ensemble(file);
  CHECK(back.size() == ens.size());
  CHECK(back.t == ens.t);
  bool identical = true;
  for (std::size_t k = 0; k < ens.size(); ++k)
    identical = identical && back.w[k].x == ens.w[k].x && back.w[k].y == ens.w[k].y;
  CHECK(identical);

  CHECK_THROWS_AS(read_ensemble(dir / "missing.bin"), std::runtime_error);
  const fs::path junk = dir / "junk.bin";
  { std::FILE* f = std::fopen(junk.c_str(), "wb"); std::fputs("not-a-header", f); std::fclose(f); }
  CHECK_THROWS_AS(read_ensemble(junk), std::runtime_error);
  fs::remove_all(dir);
}
