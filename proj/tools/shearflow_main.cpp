// Command-line driver: desk-scale simulation and verification runs.
//
//   shearflow moments  -- stress/moment ODE integration and asymptotics
//   shearflow fp       -- coupled shape-equation run on the velocity grid
//   shearflow dsmc     -- particle simulation of the sheared hard-sphere gas
//   shearflow hypo     -- hypocoercivity diagnostics of the long-time form
//   shearflow report   -- aggregate run manifests under the output root
//
// Every run writes <out_root>/<run-id>/manifest.json plus CSV series (and
// binary field/ensemble snapshots where applicable).  Exit codes: 0 all
// checks passed, 1 at least one check failed, 2 usage or configuration
// error.

#include <CLI11.hpp>

#include "shearflow/config.hpp"
#include "shearflow/dsmc.hpp"
#include "shearflow/errors.hpp"
#include "shearflow/hypoco.hpp"
#include "shearflow/moments.hpp"
#include "shearflow/report.hpp"
#include "shearflow/shape.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace shearflow;

namespace {

struct Flags {
  std::optional<std::string> config_path;
  std::optional<double> mu;
  std::vector<double> alpha; // empty or two components
  std::vector<double> beta;
  std::optional<double> t_begin;
  std::optional<double> t_end;
  std::optional<std::size_t> grid_n;
  std::optional<double> grid_l;
  std::optional<std::size_t> particles;
  std::optional<double> dt;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> init;
};

void add_common_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "JSON configuration file (flags override it)");
  cmd->add_option("--mu", f.mu, "shear strength");
  cmd->add_option("--alpha", f.alpha, "flow direction (two components)")->expected(2);
  cmd->add_option("--beta", f.beta, "gradient direction (two components)")->expected(2);
  cmd->add_option("--t-begin", f.t_begin, "start time of the reported window");
  cmd->add_option("--t-end", f.t_end, "end time");
  cmd->add_option("--grid-n", f.grid_n, "velocity grid cells per axis");
  cmd->add_option("--grid-l", f.grid_l, "velocity grid half-width");
  cmd->add_option("--particles", f.particles, "particle count");
  cmd->add_option("--dt", f.dt, "particle time step");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--out", f.out, "output root directory");
  cmd->add_option("--init", f.init, "initial state: maxwellian | gaussian | two_bump");
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

config::ExperimentConfig assemble_config(const Flags& f) {
  config::ExperimentConfig c;
  if (f.config_path) {
    const config::ParseOutcome out = config::parse_config(*f.config_path);
    if (!out.issues.empty()) {
      std::string msg = "configuration problems in " + *f.config_path + ":";
      for (const auto& i : out.issues) msg += "\n  " + i.path + ": " + i.message;
      throw UsageError(msg);
    }
    c = out.config;
  }
  if (f.mu) c.mu = *f.mu;
  if (f.alpha.size() == 2) c.alpha = {f.alpha[0], f.alpha[1]};
  if (f.beta.size() == 2) c.beta = {f.beta[0], f.beta[1]};
  if (f.t_begin) c.t_begin = *f.t_begin;
  if (f.t_end) c.t_end = *f.t_end;
  if (f.grid_n) c.grid_n = *f.grid_n;
  if (f.grid_l) c.grid_l = *f.grid_l;
  if (f.particles) c.n_particles = *f.particles;
  if (f.dt) c.dt = *f.dt;
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out_dir = *f.out;
  if (f.init) c.init = *f.init;

  const auto issues = config::validate_config(c);
  if (!issues.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& i : issues) msg += "\n  " + i.path + ": " + i.message;
    throw UsageError(msg);
  }
  return c;
}

report::RunManifest start_manifest(const std::string& subcommand,
                                   const config::ExperimentConfig& c) {
  report::RunManifest m;
  m.subcommand = subcommand;
  m.run_id = config::make_run_id(subcommand, c);
  m.config_canonical = config::to_canonical_json(c);
  m.config_hash = report::fnv1a64(m.config_canonical);
  m.seed = c.seed;
  m.module_versions = {{"tensor_core", kTensorCoreVersion},
                       {"moment_dynamics", moments::kMomentDynamicsVersion},
                       {"fp_shape_solver", fp::kShapeSolverVersion},
                       {"boltzmann_dsmc", dsmc::kBoltzmannDsmcVersion},
                       {"diagnostics_report", report::kDiagnosticsReportVersion},
                       {"cli_runner", config::kCliRunnerVersion}};
  return m;
}

fs::path make_run_dir(const config::ExperimentConfig& c, const report::RunManifest& m) {
  const fs::path dir = config::resolve_out_root(c) / m.run_id;
  fs::create_directories(dir / "series");
  fs::create_directories(dir / "fields");
  return dir;
}

int finish_run(report::RunManifest& m, const fs::path& run_dir) {
  m.write(run_dir / "manifest.json");
  for (const auto& v : m.checks) {
    const char* tag = v.state == report::CheckState::Pass   ? "PASS"
                      : v.state == report::CheckState::Fail ? "FAIL"
                                                            : "SKIP";
    std::printf("[%s] %-28s measured=%- .6e threshold=%- .6e %s\n", tag, v.name.c_str(),
                v.measured, v.threshold, v.direction.c_str());
  }
  const bool ok = m.all_passed();
  std::printf("run %s: %s -> %s\n", m.run_id.c_str(), ok ? "PASS" : "FAIL",
              (run_dir / "manifest.json").c_str());
  return ok ? 0 : 1;
}

// ------------------------------------------------------------------ moments
int run_moments(const Flags& f) {
  const config::ExperimentConfig c = assemble_config(f);
  report::RunManifest m = start_manifest("moments", c);
  const fs::path dir = make_run_dir(c, m);

  const ShearFrame frame(c.mu, c.alpha, c.beta);
  const moments::StressTrajectory traj = moments::integrate_stress(c.stress0, frame, c.t_end);
  report::write_trajectory_csv(dir / "series" / "trajectory.csv", traj);

  const auto table = moments::asymptotics_table(traj);
  if (!table.empty()) report::write_asymptotics_csv(dir / "series" / "asymptotics.csv", table);

  // frame identity residual over log-spaced sample times
  double residual = 0.0;
  const double t_lo = 1e-3, t_hi = traj.t_end();
  for (int k = 0; k <= 128; ++k) {
    const double t = t_lo * std::pow(t_hi / t_lo, k / 128.0);
    residual = std::max(
        residual, moments::frame_identity_residual(moments::coefficient_frame(traj, t)));
  }
  m.add(report::make_verdict("frame_identity_residual", residual, 1e-7, "<="));

  if (c.t_end >= 1e3) {
    moments::MomentVector h0;
    h0.h4.fill(1.0);
    h0.h6.fill(1.0);
    const moments::MomentSeries ms = moments::integrate_moments(traj, h0, 1.0, c.t_end);
    std::vector<std::vector<double>> rows;
    std::vector<double> ts, h4n;
    for (std::size_t k = 0; k < ms.times.size(); ++k) {
      rows.push_back({ms.times[k], ms.h[k].h4_norm(), ms.h[k].h6_norm()});
      ts.push_back(ms.times[k]);
      h4n.push_back(ms.h[k].h4_norm());
    }
    report::write_series_csv(dir / "series" / "moments.csv", {"t", "h4_norm", "h6_norm"}, rows);
    const report::FitResult fit = report::rate_fit(ts, h4n, 2.0);
    m.add(report::make_verdict("h4_decay_exponent", fit.slope, -1.5, "<=",
                               "power-law exponent of |h4| over the trailing decades"));
    m.add(report::make_verdict("h4_fit_r2", fit.r2, 0.98, ">="));
  } else {
    m.add(report::make_skip("h4_decay_exponent", "t_end below 1e3: window too short"));
  }
  return finish_run(m, dir);
}

// ----------------------------------------------------------------------- fp
int run_fp(const Flags& f) {
  const config::ExperimentConfig c = assemble_config(f);
  const double t0 = std::max(1.0, c.t_begin);
  if (!(c.t_end > t0))
    throw UsageError("fp: t_end must exceed max(1, t_begin) for a coupled run");

  report::RunManifest m = start_manifest("fp", c);
  const fs::path dir = make_run_dir(c, m);

  const ShearFrame frame(c.mu, c.alpha, c.beta);
  const moments::StressTrajectory traj = moments::integrate_stress(c.stress0, frame, c.t_end);

  const fp::VelocityGrid grid(static_cast<int>(c.grid_n), c.grid_l);
  fp::DensityField G0(grid);
  if (c.init == "maxwellian") G0 = fp::maxwellian(grid);
  else if (c.init == "gaussian") G0 = fp::normalized_gaussian(grid, c.stress0);
  else G0 = fp::normalized_two_bump(grid, {1.2, 0.5}, 0.5);

  fp::CoupledOptions opts;
  opts.snapshot_count = 3;
  const fp::CoupledResult res = fp::run_coupled(G0, traj, t0, c.t_end, opts);

  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < res.series.t.size(); ++k) {
    double h4n = 0.0;
    for (double v : res.series.h4[k]) h4n += v * v;
    rows.push_back({res.series.t[k], res.series.l1_to_maxwellian[k], res.series.entropy[k],
                    res.series.dissipation[k], res.series.cov_defect[k], std::sqrt(h4n)});
  }
  report::write_series_csv(dir / "series" / "coupled.csv",
                           {"t", "l1_to_maxwellian", "entropy", "dissipation", "cov_defect",
                            "h4_norm"},
                           rows);
  fp::write_field(res.final_field, res.series.t.back(), dir / "fields" / "final.bin");
  for (std::size_t k = 0; k < res.snapshots.size(); ++k)
    fp::write_field(res.snapshots[k].second, res.snapshots[k].first,
                    dir / "fields" / ("snapshot_" + std::to_string(k) + ".bin"));

  m.add(report::make_verdict("l1_contraction",
                             res.series.l1_to_maxwellian.back() /
                                 res.series.l1_to_maxwellian.front(),
                             0.999, "<=", "final over initial L1 distance to the Maxwellian"));
  double cov_max = 0.0, entropy_rise = 0.0;
  for (double cd : res.series.cov_defect) cov_max = std::max(cov_max, cd);
  for (std::size_t k = 1; k < res.series.entropy.size(); ++k)
    entropy_rise = std::max(entropy_rise, res.series.entropy[k] - res.series.entropy[k - 1]);
  m.add(report::make_verdict("cov_defect_max", cov_max, 5e-3, "<="));
  m.add(report::make_verdict("entropy_rise_max", entropy_rise, 1e-8, "<="));
  return finish_run(m, dir);
}

// --------------------------------------------------------------------- dsmc
int run_dsmc(const Flags& f) {
  const config::ExperimentConfig c = assemble_config(f);
  if (c.init == "gaussian")
    throw UsageError("dsmc: init must be maxwellian or two_bump");

  report::RunManifest m = start_manifest("dsmc", c);
  const fs::path dir = make_run_dir(c, m);

  const ShearFrame frame(c.mu, c.alpha, c.beta);
  CounterRng rng(c.seed);
  dsmc::ParticleEnsemble ens =
      c.init == "two_bump" ? dsmc::sample_two_bump(c.n_particles, {1.2, 0.5}, 0.5, rng)
                           : dsmc::sample_maxwellian(c.n_particles, 2.0, rng);

  const dsmc::DsmcResult res = dsmc::run(std::move(ens), frame, c.t_end, c.dt, {}, rng);

  std::vector<std::vector<double>> rows;
  double heat_ratio = 0.0;
  const double th0 = res.series.theta.front();
  for (std::size_t k = 0; k < res.series.t.size(); ++k) {
    rows.push_back({res.series.t[k], res.series.theta[k],
                    static_cast<double>(res.series.collisions[k])});
    const double bound = th0 * std::exp(std::abs(c.mu) * res.series.t[k]);
    heat_ratio = std::max(heat_ratio, res.series.theta[k] / bound);
  }
  report::write_series_csv(dir / "series" / "dsmc.csv", {"t", "theta", "collisions"}, rows);
  dsmc::write_ensemble(res.final_ensemble, dir / "fields" / "final_ensemble.bin");

  m.add(report::make_verdict("momentum_defect_max", res.max_momentum_defect, 1e-12, "<="));
  m.add(report::make_verdict("energy_defect_max", res.max_energy_defect, 1e-12, "<="));
  m.add(report::make_verdict("heating_bound_ratio", heat_ratio, 1.02, "<=",
                             "max of theta(t) over theta(0) exp(|mu| t)"));
  return finish_run(m, dir);
}

// --------------------------------------------------------------------- hypo
int run_hypo(const Flags& f) {
  const config::ExperimentConfig c = assemble_config(f);
  report::RunManifest m = start_manifest("hypo", c);
  const fs::path dir = make_run_dir(c, m);

  const auto checks = fp::commutator_orders({32, 64, 128});
  std::vector<std::vector<double>> crow;
  for (const auto& ck : checks) crow.push_back({ck.h, ck.max_error});
  report::write_series_csv(dir / "series" / "commutator.csv", {"h", "max_error"}, crow);
  double min_order = 1e300;
  for (std::size_t k = 1; k < checks.size(); ++k)
    min_order = std::min(min_order, std::log2(checks[k - 1].max_error / checks[k].max_error) /
                                        std::log2(checks[k - 1].h / checks[k].h));
  m.add(report::make_verdict("commutator_order", min_order, 1.9, ">="));

  const double kappa = fp::rayleigh_kappa(64);
  m.add(report::make_verdict("kappa_lower", kappa, 1.3, ">=", "continuum value 3/2"));
  m.add(report::make_verdict("kappa_upper", kappa, 1.7, "<="));

  const fp::DecayResult decay = fp::autonomous_decay_run(64, 8.0, 6.0);
  std::vector<std::vector<double>> drow;
  for (std::size_t k = 0; k < decay.s.size(); ++k)
    drow.push_back({decay.s[k], decay.h1_norm[k]});
  report::write_series_csv(dir / "series" / "hypoco_decay.csv", {"s", "h1_norm"}, drow);
  m.add(report::make_verdict("fitted_lambda", decay.fitted_lambda, 0.3, ">=",
                             "weighted-H1 exponential decay rate; spectral value 1/2"));
  return finish_run(m, dir);
}

// ------------------------------------------------------------------- report
int run_report(const Flags& f) {
  const config::ExperimentConfig c = assemble_config(f);
  const fs::path root = config::resolve_out_root(c);
  if (!fs::exists(root)) throw UsageError("report: output root does not exist: " + root.string());

  std::vector<fs::path> manifests;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().filename() == "manifest.json")
      manifests.push_back(entry.path());
  std::sort(manifests.begin(), manifests.end());

  std::ofstream md(root / "report.md");
  md << "# Shear-flow verification report\n\n";
  md << manifests.size() << " run(s) under `" << root.string() << "`\n";

  bool all_ok = true;
  for (const auto& path : manifests) {
    nlohmann::json j;
    try {
      std::ifstream in(path);
      j = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
      md << "\n## " << path.string() << "\n\nunreadable manifest: " << e.what() << "\n";
      all_ok = false;
      continue;
    }
    const bool ok = j.value("all_passed", false);
    all_ok = all_ok && ok;
    md << "\n## " << j.value("run_id", "?") << " (" << j.value("subcommand", "?") << ") -- "
       << (ok ? "PASS" : "FAIL") << "\n\n";
    md << "| check | state | measured | threshold | dir | margin |\n";
    md << "|---|---|---|---|---|---|\n";
    for (const auto& ck : j.value("checks", nlohmann::json::array())) {
      char meas[32], thr[32], marg[32];
      std::snprintf(meas, sizeof meas, "%.6g", ck.value("measured", 0.0));
      std::snprintf(thr, sizeof thr, "%.6g", ck.value("threshold", 0.0));
      std::snprintf(marg, sizeof marg, "%.3g", ck.value("margin", 0.0));
      md << "| " << ck.value("name", "?") << " | " << ck.value("state", "?") << " | " << meas
         << " | " << thr << " | " << ck.value("direction", "") << " | " << marg << " |\n";
    }
  }
  std::printf("report: %zu run(s), %s -> %s\n", manifests.size(), all_ok ? "PASS" : "FAIL",
              (root / "report.md").c_str());
  return all_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"anisotropically rescaled shear-flow solver and verifier"};
  app.require_subcommand(1);

  Flags fm, ff, fd, fh, fr;
  CLI::App* moments_cmd =
      app.add_subcommand("moments", "stress and defect-moment dynamics with asymptotics");
  add_common_flags(moments_cmd, fm);
  CLI::App* fp_cmd = app.add_subcommand("fp", "coupled shape-equation run on the grid");
  add_common_flags(fp_cmd, ff);
  CLI::App* dsmc_cmd = app.add_subcommand("dsmc", "hard-sphere particle simulation");
  add_common_flags(dsmc_cmd, fd);
  CLI::App* hypo_cmd = app.add_subcommand("hypo", "hypocoercivity diagnostics");
  add_common_flags(hypo_cmd, fh);
  CLI::App* report_cmd = app.add_subcommand("report", "aggregate manifests under the out root");
  add_common_flags(report_cmd, fr);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (moments_cmd->parsed()) return run_moments(fm);
    if (fp_cmd->parsed()) return run_fp(ff);
    if (dsmc_cmd->parsed()) return run_dsmc(fd);
    if (hypo_cmd->parsed()) return run_hypo(fh);
    if (report_cmd->parsed()) return run_report(fr);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
