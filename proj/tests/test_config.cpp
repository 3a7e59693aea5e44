#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shearflow/config.hpp"
#include "shearflow/errors.hpp"
#include "shearflow/report.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <string>

using namespace shearflow;
using namespace shearflow::config;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "shearflow_config_test") {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_json(const TempDir& tmp, const std::string& name, const std::string& text) {
  const fs::path p = tmp.path / name;
  std::ofstream out(p);
  out << text;
  return p;
}

bool has_issue(const std::vector<ConfigIssue>& issues, const std::string& path) {
  for (const auto& i : issues)
    if (i.path == path) return true;
  return false;
}

const ConfigIssue* issue_at(const std::vector<ConfigIssue>& issues, const std::string& path) {
  for (const auto& i : issues)
    if (i.path == path) return &i;
  return nullptr;
}

} // namespace

TEST_CASE("the default configuration validates cleanly") {
  const ExperimentConfig c;
  CHECK(validate_config(c).empty());
}

TEST_CASE("a complete valid file parses into the expected fields") {
  TempDir tmp;
  const fs::path p = write_json(tmp, "ok.json", R"({
    "frame": {"mu": 2.0, "alpha": [0.0, 1.0], "beta": [-1.0, 0.0]},
    "time": {"t_begin": 1.0, "t_end": 500.0, "n_outputs": 64},
    "grid": {"n": 256, "l": 10.0},
    "particles": {"n": 20000, "dt": 0.0005},
    "run": {"seed": 777, "out_dir": "/tmp/x", "init": "two_bump"},
    "stress": {"xx": 2.0, "xy": 0.5, "yy": 1.5}
  })");
  const ParseOutcome out = parse_config(p);
  CHECK(out.issues.empty());
  CHECK(out.config.mu == doctest::Approx(2.0));
  CHECK(out.config.alpha.x == 0.0);
  CHECK(out.config.alpha.y == 1.0);
  CHECK(out.config.beta.x == -1.0);
  CHECK(out.config.t_begin == doctest::Approx(1.0));
  CHECK(out.config.t_end == doctest::Approx(500.0));
  CHECK(out.config.n_outputs == 64);
  CHECK(out.config.grid_n == 256);
  CHECK(out.config.grid_l == doctest::Approx(10.0));
  CHECK(out.config.n_particles == 20000);
  CHECK(out.config.dt == doctest::Approx(0.0005));
  CHECK(out.config.seed == 777);
  CHECK(out.config.out_dir == "/tmp/x");
  CHECK(out.config.init == "two_bump");
  CHECK(out.config.stress0.xy == doctest::Approx(0.5));
}

TEST_CASE("unknown sections and keys get nearest-key suggestions") {
  TempDir tmp;
  const fs::path p = write_json(tmp, "typo.json", R"({
    "frme": {"mu": 2.0},
    "time": {"t_end": 50.0, "n_output": 10},
    "run": {"init": "maxwelian"}
  })");
  const ParseOutcome out = parse_config(p);

  const ConfigIssue* sec = issue_at(out.issues, "frme");
  REQUIRE(sec != nullptr);
  CHECK(sec->message.find("did you mean \"frame\"") != std::string::npos);

  const ConfigIssue* key = issue_at(out.issues, "time.n_output");
  REQUIRE(key != nullptr);
  CHECK(key->message.find("did you mean \"n_outputs\"") != std::string::npos);

  const ConfigIssue* init = issue_at(out.issues, "run.init");
  REQUIRE(init != nullptr);
  CHECK(init->message.find("did you mean \"maxwellian\"") != std::string::npos);
}

TEST_CASE("every problem is collected in one pass") {
  TempDir tmp;
  const fs::path p = write_json(tmp, "multi.json", R"({
    "frame": {"mu": 1000.0, "alpha": [2.0, 0.0]},
    "time": {"t_begin": 5.0, "t_end": 1.0},
    "grid": {"n": 8},
    "stress": {"xx": -1.0}
  })");
  const ParseOutcome out = parse_config(p);
  CHECK(has_issue(out.issues, "frame.mu"));
  CHECK(has_issue(out.issues, "frame.alpha"));
  CHECK(has_issue(out.issues, "time.t_end"));
  CHECK(has_issue(out.issues, "grid.n"));
  CHECK(has_issue(out.issues, "stress"));
  CHECK(out.issues.size() >= 5);
}

TEST_CASE("type mismatches are reported with their key path") {
  TempDir tmp;
  const fs::path p = write_json(tmp, "types.json", R"({
    "frame": {"mu": "fast"},
    "grid": {"n": 12.5},
    "time": {"n_outputs": -3}
  })");
  const ParseOutcome out = parse_config(p);
  CHECK(has_issue(out.issues, "frame.mu"));
  CHECK(has_issue(out.issues, "grid.n"));
  CHECK(has_issue(out.issues, "time.n_outputs"));
}

TEST_CASE("syntax errors and bad roots throw ParseError") {
  TempDir tmp;
  CHECK_THROWS_AS(parse_config(tmp.path / "missing.json"), ParseError);
  CHECK_THROWS_AS(parse_config(write_json(tmp, "bad.json", "{nope")), ParseError);
  CHECK_THROWS_AS(parse_config(write_json(tmp, "arr.json", "[1,2]")), ParseError);
}

TEST_CASE("canonical JSON is sorted, idempotent, and drives the run id") {
  const ExperimentConfig c;
  const std::string canon = to_canonical_json(c);
  CHECK(report::canonical_json_text(canon) == canon);
  // sorted top-level sections
  const auto pos = [&](const char* k) { return canon.find(k); };
  CHECK(pos("\"frame\"") < pos("\"grid\""));
  CHECK(pos("\"grid\"") < pos("\"particles\""));
  CHECK(pos("\"particles\"") < pos("\"run\""));
  CHECK(pos("\"run\"") < pos("\"stress\""));
  CHECK(pos("\"stress\"") < pos("\"time\""));

  const std::string id = make_run_id("moments", c);
  CHECK(std::regex_match(id, std::regex("^moments-[0-9a-f]{16}$")));
  CHECK(make_run_id("moments", c) == id); // stable
  ExperimentConfig c2 = c;
  c2.mu = 1.5;
  CHECK(make_run_id("moments", c2) != id); // sensitive to the config
  CHECK(make_run_id("fp", c) != id);       // and to the subcommand
}

TEST_CASE("output root resolution prefers explicit dir, then the environment") {
  ExperimentConfig c;
  c.out_dir = "/tmp/explicit";
  CHECK(resolve_out_root(c) == fs::path("/tmp/explicit"));

  c.out_dir.clear();
  ::setenv("SHEARFLOW_OUT_ROOT", "/tmp/from_env", 1);
  CHECK(resolve_out_root(c) == fs::path("/tmp/from_env"));
  ::unsetenv("SHEARFLOW_OUT_ROOT");
  CHECK(resolve_out_root(c) == fs::path("out"));
}

TEST_CASE("edit distance and nearest-key suggestions") {
  CHECK(edit_distance("kitten", "sitting") == 3);
  CHECK(edit_distance("", "abc") == 3);
  CHECK(edit_distance("abc", "abc") == 0);
  CHECK(edit_distance("flaw", "lawn") == 2);

  const std::vector<std::string> known{"mu", "alpha", "beta"};
  CHECK(nearest_key("alpah", known).value() == "alpha");
  CHECK(nearest_key("gamma", known, 1) == std::nullopt);
  CHECK(nearest_key("mu", known).value() == "mu");
}
