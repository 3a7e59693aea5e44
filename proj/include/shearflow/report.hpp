#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shearflow/moments.hpp"

namespace shearflow::report {

inline constexpr const char* kDiagnosticsReportVersion = "1.0.0";

// ------------------------------------------------------------------ fitting
struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n_points = 0;
};

// Least-squares line through (x, y); throws InsufficientData below 8 points.
FitResult linear_fit(std::span<const double> x, std::span<const double> y);

// Power-law fit of y(t) over the trailing window_decades decades of t:
// log|y| against log t, restricted to t >= t_max / 10^window_decades and
// y != 0.  slope is the power-law exponent.
FitResult rate_fit(std::span<const double> t, std::span<const double> y,
                   double window_decades = 1.0);

// Exponential fit over the same trailing window in absolute time:
// log|y| against t (slope is the exponential rate).
FitResult exp_rate_fit(std::span<const double> t, std::span<const double> y,
                       double window_fraction = 0.5);

// ------------------------------------------------------------------ verdicts
enum class CheckState { Pass, Fail, Skip };

struct Verdict {
  std::string name;
  CheckState state = CheckState::Skip;
  double measured = 0.0;
  double threshold = 0.0;
  std::string direction; // "<=" or ">="
  double margin = 0.0;   // (threshold - measured) / threshold, sign per direction
  std::string note;
};

// Compare measured against threshold; margin is the normalized headroom,
// positive when the check passes with room to spare.
Verdict make_verdict(const std::string& name, double measured, double threshold,
                     const std::string& direction, const std::string& note = "");
Verdict make_skip(const std::string& name, const std::string& note);

// -------------------------------------------------------------- criteria file
struct CriterionSpec {
  int id = 0;
  std::string name;
  std::map<std::string, double> tolerances;
};

// Load the acceptance-criteria registry (id, name, numeric tolerances).
// Unknown criterion names in lookups throw UnknownCriterion.
std::vector<CriterionSpec> load_criteria(const std::filesystem::path& path);
const CriterionSpec& find_criterion(const std::vector<CriterionSpec>& cs, const std::string& name);

// ------------------------------------------------------------------ manifest
// One run manifest: configuration hash, seed, module versions, and every
// check verdict exactly once.  Serialized as JSON.
struct RunManifest {
  std::string run_id;
  std::string subcommand;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string config_canonical; // canonical JSON text the hash covers
  std::map<std::string, std::string> module_versions;
  std::vector<Verdict> checks;

  bool all_passed() const;
  void add(const Verdict& v); // rejects duplicate check names
  void write(const std::filesystem::path& path) const;
};

// FNV-1a 64-bit over bytes.
std::uint64_t fnv1a64(std::string_view bytes);

// Canonical JSON text: keys sorted, no insignificant whitespace, shortest
// round-trip float representation -- the byte stream the config hash covers.
std::string canonical_json_text(const std::string& json_text);

// ------------------------------------------------------------------ CSV/plots
// Write a CSV with the given header columns and rows, then drop a gnuplot
// script of the same stem next to it with log-log and semi-log stanzas for
// each value column against the first column.
void write_series_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows,
                      bool emit_gnuplot_script = true);

// Stress trajectory export with the fixed column set
// t, T_xx, T_xy, T_yy, a, b, c, theta, eta_xx, eta_xy, eta_yy,
// F_xx, F_xy, F_yx, F_yy  (frames re-derived at each stored node).
void write_trajectory_csv(const std::filesystem::path& path,
                          const moments::StressTrajectory& traj,
                          std::size_t max_rows = 2000);

// Asymptotics table export (columns mirror moments::AsymptoticsRow).
void write_asymptotics_csv(const std::filesystem::path& path,
                           const std::vector<moments::AsymptoticsRow>& rows);

} // namespace shearflow::report
