#include "shearflow/config.hpp"

#include "shearflow/errors.hpp"
#include "shearflow/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <stdexcept>

namespace shearflow::config {

namespace {

using nlohmann::json;

const std::map<std::string, std::vector<std::string>>& schema() {
  static const std::map<std::string, std::vector<std::string>> s = {
      {"frame", {"mu", "alpha", "beta"}},
      {"time", {"t_begin", "t_end", "n_outputs"}},
      {"grid", {"n", "l"}},
      {"particles", {"n", "dt"}},
      {"run", {"seed", "out_dir", "init"}},
      {"stress", {"xx", "xy", "yy"}},
  };
  return s;
}

void issue(std::vector<ConfigIssue>& out, std::string path, std::string message) {
  out.push_back({std::move(path), std::move(message)});
}

bool take_number(const json& section, const std::string& sec_name, const std::string& key,
                 double& dst, std::vector<ConfigIssue>& issues) {
  if (!section.contains(key)) return false;
  const json& v = section.at(key);
  if (!v.is_number()) {
    issue(issues, sec_name + "." + key, "expected a number");
    return false;
  }
  dst = v.get<double>();
  return true;
}

bool take_count(const json& section, const std::string& sec_name, const std::string& key,
                std::size_t& dst, std::vector<ConfigIssue>& issues) {
  if (!section.contains(key)) return false;
  const json& v = section.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    issue(issues, sec_name + "." + key, "expected a non-negative integer");
    return false;
  }
  dst = static_cast<std::size_t>(v.get<long long>());
  return true;
}

bool take_vec2(const json& section, const std::string& sec_name, const std::string& key,
               Vec2& dst, std::vector<ConfigIssue>& issues) {
  if (!section.contains(key)) return false;
  const json& v = section.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    issue(issues, sec_name + "." + key, "expected an array of two numbers");
    return false;
  }
  dst = {v[0].get<double>(), v[1].get<double>()};
  return true;
}

void flag_unknown_keys(const json& section, const std::string& sec_name,
                       const std::vector<std::string>& known,
                       std::vector<ConfigIssue>& issues) {
  for (const auto& [key, value] : section.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) != known.end()) continue;
    std::string msg = "unknown key";
    if (auto near = nearest_key(key, known)) msg += "; did you mean \"" + *near + "\"?";
    issue(issues, sec_name + "." + key, msg);
  }
}

} // namespace

ParseOutcome parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("parse_config: cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("parse_config: " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError("parse_config: top level must be an object");

  ParseOutcome out;
  ExperimentConfig& c = out.config;
  std::vector<ConfigIssue>& issues = out.issues;

  std::vector<std::string> section_names;
  for (const auto& [name, keys] : schema()) section_names.push_back(name);
  for (const auto& [name, value] : j.items()) {
    if (schema().count(name) == 0) {
      std::string msg = "unknown section";
      if (auto near = nearest_key(name, section_names)) msg += "; did you mean \"" + *near + "\"?";
      issue(issues, name, msg);
      continue;
    }
    if (!value.is_object()) {
      issue(issues, name, "expected an object");
      continue;
    }
    flag_unknown_keys(value, name, schema().at(name), issues);
  }

  if (j.contains("frame") && j["frame"].is_object()) {
    const json& s = j["frame"];
    take_number(s, "frame", "mu", c.mu, issues);
    take_vec2(s, "frame", "alpha", c.alpha, issues);
    take_vec2(s, "frame", "beta", c.beta, issues);
  }
  if (j.contains("time") && j["time"].is_object()) {
    const json& s = j["time"];
    take_number(s, "time", "t_begin", c.t_begin, issues);
    take_number(s, "time", "t_end", c.t_end, issues);
    take_count(s, "time", "n_outputs", c.n_outputs, issues);
  }
  if (j.contains("grid") && j["grid"].is_object()) {
    const json& s = j["grid"];
    take_count(s, "grid", "n", c.grid_n, issues);
    take_number(s, "grid", "l", c.grid_l, issues);
  }
  if (j.contains("particles") && j["particles"].is_object()) {
    const json& s = j["particles"];
    take_count(s, "particles", "n", c.n_particles, issues);
    take_number(s, "particles", "dt", c.dt, issues);
  }
  if (j.contains("run") && j["run"].is_object()) {
    const json& s = j["run"];
    if (s.contains("seed")) {
      if (s.at("seed").is_number_integer() && s.at("seed").get<long long>() >= 0)
        c.seed = s.at("seed").get<std::uint64_t>();
      else
        issue(issues, "run.seed", "expected a non-negative integer");
    }
    if (s.contains("out_dir")) {
      if (s.at("out_dir").is_string())
        c.out_dir = s.at("out_dir").get<std::string>();
      else
        issue(issues, "run.out_dir", "expected a string");
    }
    if (s.contains("init")) {
      if (s.at("init").is_string())
        c.init = s.at("init").get<std::string>();
      else
        issue(issues, "run.init", "expected a string");
    }
  }
  if (j.contains("stress") && j["stress"].is_object()) {
    const json& s = j["stress"];
    take_number(s, "stress", "xx", c.stress0.xx, issues);
    take_number(s, "stress", "xy", c.stress0.xy, issues);
    take_number(s, "stress", "yy", c.stress0.yy, issues);
  }

  for (const ConfigIssue& semantic : validate_config(c)) issues.push_back(semantic);
  return out;
}

std::vector<ConfigIssue> validate_config(const ExperimentConfig& c) {
  std::vector<ConfigIssue> issues;
  if (!std::isfinite(c.mu) || std::abs(c.mu) > 100.0)
    issue(issues, "frame.mu", "must be finite with |mu| <= 100");
  if (std::abs(c.alpha.norm() - 1.0) > 1e-9)
    issue(issues, "frame.alpha", "must be unit length");
  if (std::abs(c.beta.norm() - 1.0) > 1e-9) issue(issues, "frame.beta", "must be unit length");
  if (std::abs(c.alpha.dot(c.beta)) > 1e-9)
    issue(issues, "frame.beta", "must be orthogonal to alpha");
  if (!std::isfinite(c.t_begin) || c.t_begin < 0.0)
    issue(issues, "time.t_begin", "must be finite and non-negative");
  if (!std::isfinite(c.t_end) || c.t_end <= c.t_begin)
    issue(issues, "time.t_end", "must be finite and exceed t_begin");
  if (c.n_outputs < 2 || c.n_outputs > 1000000)
    issue(issues, "time.n_outputs", "must lie in [2, 1e6]");
  if (c.grid_n < 16 || c.grid_n > 4096) issue(issues, "grid.n", "must lie in [16, 4096]");
  if (!std::isfinite(c.grid_l) || c.grid_l < 6.0 || c.grid_l > 64.0)
    issue(issues, "grid.l", "must lie in [6, 64]");
  if (c.n_particles < 1000 || c.n_particles > 100000000)
    issue(issues, "particles.n", "must lie in [1000, 1e8]");
  if (!std::isfinite(c.dt) || c.dt <= 0.0 || c.dt > 1.0)
    issue(issues, "particles.dt", "must lie in (0, 1]");
  if (c.init != "maxwellian" && c.init != "gaussian" && c.init != "two_bump") {
    std::string msg = "must be one of maxwellian, gaussian, two_bump";
    if (auto near = nearest_key(c.init, {"maxwellian", "gaussian", "two_bump"}))
      msg += "; did you mean \"" + *near + "\"?";
    issue(issues, "run.init", msg);
  }
  if (!(c.stress0.xx > 0.0) || !(c.stress0.det() > 0.0))
    issue(issues, "stress", "initial stress must be positive definite");
  return issues;
}

std::string to_canonical_json(const ExperimentConfig& c) {
  json j;
  j["frame"]["mu"] = c.mu;
  j["frame"]["alpha"] = {c.alpha.x, c.alpha.y};
  j["frame"]["beta"] = {c.beta.x, c.beta.y};
  j["time"]["t_begin"] = c.t_begin;
  j["time"]["t_end"] = c.t_end;
  j["time"]["n_outputs"] = c.n_outputs;
  j["grid"]["n"] = c.grid_n;
  j["grid"]["l"] = c.grid_l;
  j["particles"]["n"] = c.n_particles;
  j["particles"]["dt"] = c.dt;
  j["run"]["seed"] = c.seed;
  j["run"]["out_dir"] = c.out_dir;
  j["run"]["init"] = c.init;
  j["stress"]["xx"] = c.stress0.xx;
  j["stress"]["xy"] = c.stress0.xy;
  j["stress"]["yy"] = c.stress0.yy;
  return j.dump();
}

std::string make_run_id(const std::string& subcommand, const ExperimentConfig& c) {
  const std::uint64_t h = report::fnv1a64(to_canonical_json(c));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return subcommand + "-" + buf;
}

std::filesystem::path resolve_out_root(const ExperimentConfig& c) {
  if (!c.out_dir.empty()) return c.out_dir;
  if (const char* env = std::getenv("SHEARFLOW_OUT_ROOT"); env && *env) return env;
  return "out";
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  const std::size_t na = a.size(), nb = b.size();
  std::vector<std::size_t> prev(nb + 1), cur(nb + 1);
  for (std::size_t j = 0; j <= nb; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= na; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= nb; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[nb];
}

std::optional<std::string> nearest_key(std::string_view key,
                                       const std::vector<std::string>& known,
                                       std::size_t max_distance) {
  std::optional<std::string> best;
  std::size_t best_d = max_distance + 1;
  for (const std::string& k : known) {
    const std::size_t d = edit_distance(key, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

} // namespace shearflow::config
