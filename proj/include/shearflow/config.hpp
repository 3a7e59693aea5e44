#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shearflow/tensor.hpp"

namespace shearflow::config {

inline constexpr const char* kCliRunnerVersion = "1.0.0";

// Full experiment configuration shared by every subcommand.  Fields are
// grouped the way the JSON config file groups them; command-line flags
// override file values field by field.
struct ExperimentConfig {
  // [frame]
  double mu = 1.0;
  Vec2 alpha{1.0, 0.0};
  Vec2 beta{0.0, 1.0};

  // [time]
  double t_begin = 0.0;
  double t_end = 100.0;
  std::size_t n_outputs = 200;

  // [grid]
  std::size_t grid_n = 128;
  double grid_l = 8.0;

  // [particles]
  std::size_t n_particles = 100000;
  double dt = 1e-3;

  // [run]
  std::uint64_t seed = 12345;
  std::string out_dir; // empty -> SHEARFLOW_OUT_ROOT or ./out
  std::string init = "maxwellian"; // maxwellian | gaussian | two_bump

  // [stress] initial condition
  SymTensor2 stress0{1.0, 0.0, 1.0};
};

struct ConfigIssue {
  std::string path;    // dotted key path, e.g. "frame.alpha"
  std::string message; // what is wrong, with a nearest-key suggestion if any
};

struct ParseOutcome {
  ExperimentConfig config;
  std::vector<ConfigIssue> issues; // empty means success
};

// Parse a JSON config file.  Collects every problem it can find (unknown
// keys with nearest-key suggestions, type mismatches, out-of-range values,
// non-unit frame vectors) instead of stopping at the first; callers decide
// whether issues are fatal.  I/O or JSON syntax failure throws ParseError.
ParseOutcome parse_config(const std::filesystem::path& path);

// Validate semantic constraints of a fully assembled config (also used on
// flag-only runs): positive mu magnitude bounds, unit alpha/beta,
// orthogonality, grid bounds, positive-definite stress0.
std::vector<ConfigIssue> validate_config(const ExperimentConfig& c);

// Canonical JSON text of a config (sorted keys), the byte stream whose
// FNV-1a hash becomes the run id.
std::string to_canonical_json(const ExperimentConfig& c);

// Deterministic run id: subcommand plus zero-padded hash prefix.
std::string make_run_id(const std::string& subcommand, const ExperimentConfig& c);

// Resolve the output root: explicit out_dir, else SHEARFLOW_OUT_ROOT, else ./out.
std::filesystem::path resolve_out_root(const ExperimentConfig& c);

// Edit-distance helper for nearest-key suggestions (exposed for tests).
std::size_t edit_distance(std::string_view a, std::string_view b);
std::optional<std::string> nearest_key(std::string_view key,
                                       const std::vector<std::string>& known,
                                       std::size_t max_distance = 3);

} // namespace shearflow::config
