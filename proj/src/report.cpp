#include "shearflow/report.hpp"

#include "shearflow/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

namespace shearflow::report {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

FitResult fit_logged(const std::vector<double>& xs, const std::vector<double>& ys) {
  return linear_fit(std::span<const double>(xs), std::span<const double>(ys));
}

} // namespace

FitResult linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("linear_fit: size mismatch");
  if (x.size() < 8) throw InsufficientData("linear_fit: need at least 8 points");
  const std::size_t n = x.size();
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw InsufficientData("linear_fit: degenerate abscissa");
  FitResult f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.n_points = n;
  if (syy == 0.0) {
    f.r2 = 1.0;
  } else {
    const double ss_res = syy - f.slope * sxy;
    f.r2 = 1.0 - std::max(0.0, ss_res) / syy;
  }
  return f;
}

FitResult rate_fit(std::span<const double> t, std::span<const double> y,
                   double window_decades) {
  if (t.size() != y.size()) throw std::invalid_argument("rate_fit: size mismatch");
  double t_max = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] > 0.0 && y[i] != 0.0) t_max = std::max(t_max, t[i]);
  if (t_max == 0.0) throw InsufficientData("rate_fit: no usable points");
  const double t_lo = t_max / std::pow(10.0, window_decades);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_lo || t[i] <= 0.0 || y[i] == 0.0) continue;
    xs.push_back(std::log(t[i]));
    ys.push_back(std::log(std::abs(y[i])));
  }
  return fit_logged(xs, ys);
}

FitResult exp_rate_fit(std::span<const double> t, std::span<const double> y,
                       double window_fraction) {
  if (t.size() != y.size()) throw std::invalid_argument("exp_rate_fit: size mismatch");
  if (t.empty()) throw InsufficientData("exp_rate_fit: empty series");
  double t_min = t[0], t_max = t[0];
  for (double v : t) {
    t_min = std::min(t_min, v);
    t_max = std::max(t_max, v);
  }
  const double t_lo = t_max - window_fraction * (t_max - t_min);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_lo || y[i] == 0.0) continue;
    xs.push_back(t[i]);
    ys.push_back(std::log(std::abs(y[i])));
  }
  return fit_logged(xs, ys);
}

Verdict make_verdict(const std::string& name, double measured, double threshold,
                     const std::string& direction, const std::string& note) {
  if (direction != "<=" && direction != ">=")
    throw std::invalid_argument("make_verdict: direction must be \"<=\" or \">=\"");
  Verdict v;
  v.name = name;
  v.measured = measured;
  v.threshold = threshold;
  v.direction = direction;
  v.note = note;
  const double denom = std::abs(threshold) > 1e-300 ? std::abs(threshold) : 1.0;
  if (direction == "<=") {
    v.state = measured <= threshold ? CheckState::Pass : CheckState::Fail;
    v.margin = (threshold - measured) / denom;
  } else {
    v.state = measured >= threshold ? CheckState::Pass : CheckState::Fail;
    v.margin = (measured - threshold) / denom;
  }
  return v;
}

Verdict make_skip(const std::string& name, const std::string& note) {
  Verdict v;
  v.name = name;
  v.state = CheckState::Skip;
  v.note = note;
  return v;
}

std::vector<CriterionSpec> load_criteria(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_criteria: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("load_criteria: " + path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw ParseError("load_criteria: top level must be an array");
  std::vector<CriterionSpec> out;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("id") || !item.contains("name"))
      throw ParseError("load_criteria: each entry needs id and name");
    CriterionSpec spec;
    spec.id = item.at("id").get<int>();
    spec.name = item.at("name").get<std::string>();
    if (item.contains("tolerances")) {
      for (const auto& [k, v] : item.at("tolerances").items())
        spec.tolerances[k] = v.get<double>();
    }
    out.push_back(std::move(spec));
  }
  return out;
}

const CriterionSpec& find_criterion(const std::vector<CriterionSpec>& cs,
                                    const std::string& name) {
  for (const CriterionSpec& c : cs)
    if (c.name == name) return c;
  throw UnknownCriterion("find_criterion: no criterion named " + name);
}

bool RunManifest::all_passed() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const Verdict& v) { return v.state == CheckState::Fail; });
}

void RunManifest::add(const Verdict& v) {
  for (const Verdict& existing : checks)
    if (existing.name == v.name)
      throw std::logic_error("RunManifest::add: duplicate check " + v.name);
  checks.push_back(v);
}

void RunManifest::write(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["run_id"] = run_id;
  j["subcommand"] = subcommand;
  char hash_buf[32];
  std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                static_cast<unsigned long long>(config_hash));
  j["config_hash"] = hash_buf;
  j["seed"] = seed;
  if (config_canonical.empty()) {
    j["config"] = nullptr;
  } else {
    j["config"] = nlohmann::json::parse(config_canonical);
  }
  j["module_versions"] = module_versions;
  nlohmann::json checks_json = nlohmann::json::array();
  for (const Verdict& v : checks) {
    nlohmann::json c;
    c["name"] = v.name;
    c["state"] = v.state == CheckState::Pass   ? "PASS"
                 : v.state == CheckState::Fail ? "FAIL"
                                               : "SKIP";
    c["measured"] = v.measured;
    c["threshold"] = v.threshold;
    c["direction"] = v.direction;
    c["margin"] = v.margin;
    c["note"] = v.note;
    checks_json.push_back(std::move(c));
  }
  j["checks"] = std::move(checks_json);
  j["all_passed"] = all_passed();

  std::ofstream out(path);
  if (!out) throw std::runtime_error("RunManifest::write: cannot open " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("RunManifest::write: write failed for " + path.string());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string canonical_json_text(const std::string& json_text) {
  try {
    return nlohmann::json::parse(json_text).dump();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("canonical_json_text: ") + e.what());
  }
}

void write_series_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows,
                      bool emit_gnuplot_script) {
  if (columns.empty()) throw std::invalid_argument("write_series_csv: no columns");
  for (const auto& r : rows)
    if (r.size() != columns.size())
      throw std::invalid_argument("write_series_csv: row width mismatch");

  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_series_csv: cannot open " + path.string());
  for (std::size_t c = 0; c < columns.size(); ++c)
    out << (c ? "," : "") << columns[c];
  out << "\n";
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c)
      out << (c ? "," : "") << format_double(r[c]);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_series_csv: write failed for " + path.string());

  if (!emit_gnuplot_script || columns.size() < 2) return;
  std::filesystem::path gp = path;
  gp.replace_extension(".gp");
  std::ofstream script(gp);
  if (!script) return; // plotting script is best-effort
  const std::string stem = path.stem().string();
  const std::string csv_name = path.filename().string();
  script << "set datafile separator ','\n";
  script << "set key autotitle columnhead\n";
  script << "set terminal pngcairo size 1000,700\n\n";
  script << "set logscale xy\n";
  script << "set output '" << stem << "_loglog.png'\n";
  script << "plot ";
  for (std::size_t c = 2; c <= columns.size(); ++c)
    script << (c > 2 ? ", " : "") << "'" << csv_name << "' using 1:" << c
           << " with lines";
  script << "\n\n";
  script << "unset logscale x\nset logscale y\n";
  script << "set output '" << stem << "_semilog.png'\n";
  script << "plot ";
  for (std::size_t c = 2; c <= columns.size(); ++c)
    script << (c > 2 ? ", " : "") << "'" << csv_name << "' using 1:" << c
           << " with lines";
  script << "\n";
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const moments::StressTrajectory& traj, std::size_t max_rows) {
  if (max_rows < 2) throw std::invalid_argument("write_trajectory_csv: max_rows >= 2");
  const std::vector<std::string> columns = {
      "t",      "T_xx",   "T_xy",   "T_yy", "a",    "b",    "c",    "theta",
      "eta_xx", "eta_xy", "eta_yy", "F_xx", "F_xy", "F_yx", "F_yy"};
  const std::size_t n = traj.size();
  const std::size_t stride = std::max<std::size_t>(1, (n + max_rows - 1) / max_rows);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n; i += stride) {
    const std::size_t k = (i + stride >= n) ? n - 1 : i; // always include the last node
    const double t = traj.times[k];
    const SymTensor2& T = traj.stress[k];
    const Vec2 a = traj.frame.alpha, b = traj.frame.beta;
    const double Taa = a.dot(T * a), Tab = a.dot(T * b), Tbb = b.dot(T * b);
    double av = 0.0, bv = 0.0, cv = 0.0;
    if (t > 0.0) {
      av = Taa / (t * t * t);
      bv = Tab / (t * t);
      cv = Tbb / t;
    }
    const moments::CoefficientFrame cf = moments::frame_from_stress(t, T, traj.frame);
    rows.push_back({t, T.xx, T.xy, T.yy, av, bv, cv, cf.theta, cf.eta.xx, cf.eta.xy,
                    cf.eta.yy, cf.F.a11, cf.F.a12, cf.F.a21, cf.F.a22});
    if (k == n - 1) break;
  }
  write_series_csv(path, columns, rows);
}

void write_asymptotics_csv(const std::filesystem::path& path,
                           const std::vector<moments::AsymptoticsRow>& rows) {
  const std::vector<std::string> columns = {"t",           "txx_ratio",    "txy_ratio",
                                            "tyy_ratio",   "theta_ratio",  "eta_xx_ratio",
                                            "eta_yy_ratio", "f_residual"};
  std::vector<std::vector<double>> data;
  data.reserve(rows.size());
  for (const auto& r : rows)
    data.push_back({r.t, r.txx_ratio, r.txy_ratio, r.tyy_ratio, r.theta_ratio,
                    r.eta_xx_ratio, r.eta_yy_ratio, r.f_residual});
  write_series_csv(path, columns, data);
}

} // namespace shearflow::report
