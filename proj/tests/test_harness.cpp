// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spherelab/errors.hpp"
#include "spherelab/experiment.hpp"

using namespace spherelab;
namespace fs = std::filesystem;

namespace {

std::string tmp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("spherelab_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kCoupleConfig = R"({
  "experiment": "couple",
  "seed": 7,
  "output": {"dir": "PLACEHOLDER", "format": "csv"},
  "sim": {"dimension": 100, "dt": 0.001, "horizon": 0.5, "ensemble": 200,
          "tagged": [0], "initial": [1.0], "checkpoints": 5},
  "couple": {"alpha": 1.0, "beta": 0.5}
})";

ExperimentSpec couple_spec(const std::string& out_dir) {
  std::string text = kCoupleConfig;
  text.replace(text.find("PLACEHOLDER"), 11, out_dir);
  return parse_experiment(text);
}

}  // namespace

TEST_CASE("config parsing is strict") {
  SUBCASE("unknown top-level key") {
    CHECK_THROWS_WITH_AS(
        parse_experiment(R"({"experiment": "simulate", "sims": {}})"),
        doctest::Contains("unknown key 'sims'"), Error);
  }
  SUBCASE("unknown nested key") {
    CHECK_THROWS_WITH_AS(
        parse_experiment(
            R"({"experiment": "simulate", "sim": {"dimensions": 5}})"),
        doctest::Contains("sim.dimensions"), Error);
  }
  SUBCASE("missing experiment kind") {
    CHECK_THROWS_AS(parse_experiment(R"({"seed": 1})"), Error);
  }
  SUBCASE("section for the wrong kind") {
    CHECK_THROWS_AS(
        parse_experiment(R"({"experiment": "kac", "sim": {"dimension": 5}})"),
        Error);
  }
  SUBCASE("parse errors carry line numbers") {
    try {
      parse_experiment("{\n  \"experiment\": \"simulate\",\n  oops\n}");
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_spec);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("type errors") {
    CHECK_THROWS_AS(
        parse_experiment(
            R"({"experiment": "simulate", "sim": {"dimension": -3}})"),
        Error);
    CHECK_THROWS_AS(
        parse_experiment(R"({"experiment": "simulate", "seed": "x"})"),
        Error);
  }
  SUBCASE("dt auto is accepted") {
    const ExperimentSpec spec = parse_experiment(
        R"({"experiment": "simulate", "sim": {"dt": "auto", "dimension": 8}})");
    CHECK(spec.dt_auto);
  }
  SUBCASE("unknown check name") {
    CHECK_THROWS_AS(
        parse_experiment(
            R"({"experiment": "simulate", "checks": ["momentode"]})"),
        Error);
  }
  SUBCASE("chaos needs at least two tagged components") {
    CHECK_THROWS_AS(parse_experiment(R"({"experiment": "chaos"})"), Error);
  }
  SUBCASE("missing config file") {
    CHECK_THROWS_AS(load_experiment("/nonexistent/config.json"), Error);
    try {
      load_experiment("/nonexistent/config.json");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_spec);
    }
  }
}

TEST_CASE("couple experiment writes a complete, audited run") {
  const std::string dir = tmp_dir("couple");
  const ExperimentSpec spec = couple_spec(dir);
  const RunResult result = run_experiment(spec, true);
  CHECK(result.exit_code == 0);
  CHECK(!result.partial);

  // Every output file is referenced from the manifest; no orphans.
  const nlohmann::json manifest =
      nlohmann::json::parse(read_file(dir + "/manifest.json"));
  std::set<std::string> listed;
  for (const auto& f : manifest.at("outputs")) {
    listed.insert(f.get<std::string>());
  }
  std::set<std::string> present;
  for (const auto& entry : fs::directory_iterator(dir)) {
    present.insert(entry.path().filename().string());
  }
  listed.insert("manifest.json");
  CHECK(listed == present);
  CHECK(manifest.at("partial").get<bool>() == false);
  CHECK(manifest.at("config").at("sim").at("dimension").get<int>() == 100);

  // Bound domination holds at this scale and the verdicts audit cleanly.
  bool saw_bound = false;
  for (const auto& c : result.checks) {
    if (c.name == "bound-domination") {
      saw_bound = true;
      CHECK(c.pass);
    }
  }
  CHECK(saw_bound);
  const nlohmann::json audit = nlohmann::json::parse(audit_run(dir));
  CHECK(audit.at("match").get<bool>());
}

TEST_CASE("identical specs reproduce byte-identical numeric outputs") {
  const std::string dir_a = tmp_dir("det_a");
  const std::string dir_b = tmp_dir("det_b");
  ExperimentSpec a = couple_spec(dir_a);
  ExperimentSpec b = couple_spec(dir_b);
  a.workers = 1;
  b.workers = 2;  // worker count must not change the bytes
  run_experiment(a, false);
  run_experiment(b, false);
  CHECK(read_file(dir_a + "/msd.csv") == read_file(dir_b + "/msd.csv"));
  CHECK(read_file(dir_a + "/summary.json") ==
        read_file(dir_b + "/summary.json"));
}

TEST_CASE("csv floats carry 17 significant digits") {
  const std::string dir = tmp_dir("fmt");
  ExperimentSpec spec = couple_spec(dir);
  run_experiment(spec, false);
  const Table table = read_csv(dir + "/msd.csv");
  CHECK(table.columns.front() == "t");
  // Round-trip losslessness: re-render every parsed value.
  const std::string raw = read_file(dir + "/msd.csv");
  for (const auto& row : table.rows) {
    for (double v : row) {
      CHECK(raw.find(format_g17(v)) != std::string::npos);
    }
  }
}

TEST_CASE("compare: identical runs give an empty diff") {
  const std::string dir_a = tmp_dir("cmp_a");
  const std::string dir_b = tmp_dir("cmp_b");
  ExperimentSpec a = couple_spec(dir_a);
  ExperimentSpec b = couple_spec(dir_b);
  run_experiment(a, false);
  run_experiment(b, false);
  const nlohmann::json report = nlohmann::json::parse(
      compare_runs(dir_a + "/manifest.json", dir_b + "/manifest.json"));
  CHECK(report.at("identical_config").get<bool>());
  for (const auto& d : report.at("stat_diffs")) {
    CHECK(d.at("max_se_distance").get<double>() == 0.0);
  }
}

TEST_CASE("compare: different seeds stay within 3 combined SE") {
  const std::string dir_a = tmp_dir("seed_a");
  const std::string dir_b = tmp_dir("seed_b");
  ExperimentSpec a = couple_spec(dir_a);
  ExperimentSpec b = couple_spec(dir_b);
  b.seed = 8;
  b.sim.seed = 8;
  run_experiment(a, false);
  run_experiment(b, false);
  const nlohmann::json report = nlohmann::json::parse(
      compare_runs(dir_a + "/manifest.json", dir_b + "/manifest.json"));
  // Seed is stream identity, not configuration: the config diff stays empty.
  CHECK(report.at("identical_config").get<bool>());
  CHECK(report.at("seed_a").get<int>() != report.at("seed_b").get<int>());
  bool saw_msd = false;
  for (const auto& d : report.at("stat_diffs")) {
    if (d.contains("column") && d.at("column") == "msd") {
      saw_msd = true;
      CHECK(d.at("consistent").get<bool>());
    }
  }
  CHECK(saw_msd);
}

TEST_CASE("compare: dimension doubling shows up as an msd ratio near 2") {
  const std::string dir_a = tmp_dir("ratio_a");
  const std::string dir_b = tmp_dir("ratio_b");
  ExperimentSpec a = couple_spec(dir_a);
  ExperimentSpec b = couple_spec(dir_b);
  a.sim.dimension = 60;
  b.sim.dimension = 120;
  a.sim.ensemble = b.sim.ensemble = 400;
  run_experiment(a, false);
  run_experiment(b, false);
  const nlohmann::json report = nlohmann::json::parse(
      compare_runs(dir_a + "/manifest.json", dir_b + "/manifest.json"));
  bool saw_dimension_diff = false;
  for (const auto& d : report.at("config_diffs")) {
    if (d.at("key") == "sim.dimension") saw_dimension_diff = true;
  }
  CHECK(saw_dimension_diff);
  for (const auto& d : report.at("stat_diffs")) {
    if (d.contains("column") && d.at("column") == "msd") {
      const double ratio = d.at("mean_ratio").get<double>();
      CHECK(ratio > 1.4);
      CHECK(ratio < 2.9);
    }
  }
}

TEST_CASE("compare: mismatched kinds are an error") {
  const std::string dir_a = tmp_dir("kind_a");
  const std::string dir_b = tmp_dir("kind_b");
  ExperimentSpec a = couple_spec(dir_a);
  run_experiment(a, false);
  const ExperimentSpec m = parse_experiment(
      R"({"experiment": "marginal", "output": {"dir": ")" + dir_b +
      R"("}, "marginal": {"dimension": 3, "samples": 2000}})");
  run_experiment(m, false);
  CHECK_THROWS_AS(
      compare_runs(dir_a + "/manifest.json", dir_b + "/manifest.json"),
      Error);
}

TEST_CASE("kac budget exceeded flags partial outputs with exit code 3") {
  const std::string dir = tmp_dir("budget");
  const ExperimentSpec spec = parse_experiment(
      R"({"experiment": "kac", "seed": 3, "output": {"dir": ")" + dir +
      R"("}, "kac": {"dimension": 8, "epsilons": [0.25], "horizon": 5.0,
           "ensemble": 10, "event_budget": 20, "diffusion_compare": false}})");
  const RunResult result = run_experiment(spec, true);
  CHECK(result.exit_code == 3);
  CHECK(result.partial);
  const nlohmann::json manifest =
      nlohmann::json::parse(read_file(dir + "/manifest.json"));
  CHECK(manifest.at("partial").get<bool>());
}

TEST_CASE("marginal experiment end to end") {
  const std::string dir = tmp_dir("marginal");
  const ExperimentSpec spec = parse_experiment(
      R"({"experiment": "marginal", "seed": 5, "output": {"dir": ")" + dir +
      R"("}, "marginal": {"dimension": 3, "samples": 20000,
                          "lift_check": true}})");
  const RunResult result = run_experiment(spec, true);
  CHECK(result.exit_code == 0);
  std::set<std::string> names;
  for (const auto& c : result.checks) {
    names.insert(c.name);
    CHECK(c.pass);
  }
  CHECK(names.count("ks-marginal"));
  CHECK(names.count("normalization"));
  CHECK(names.count("lift-ks"));
  const nlohmann::json audit = nlohmann::json::parse(audit_run(dir));
  CHECK(audit.at("match").get<bool>());
}

TEST_CASE("simulate experiment with the jump integrator") {
  const std::string dir = tmp_dir("simjump");
  const ExperimentSpec spec = parse_experiment(
      R"({"experiment": "simulate", "seed": 11, "output": {"dir": ")" + dir +
      R"("}, "sim": {"dimension": 8, "dt": 0.01, "horizon": 0.5,
           "ensemble": 50, "integrator": "kac-jump", "epsilon": 0.25,
           "initial": [1.0], "checkpoints": 5}, "checks": []})");
  const RunResult result = run_experiment(spec, true);
  CHECK(result.exit_code == 0);
  const Table moments = read_csv(dir + "/moments.csv");
  // Jump dynamics conserve the radius exactly.
  for (const auto& row : moments.rows) {
    CHECK(std::abs(row[moments.col("drift_max_abs")]) < 1e-10 * 8.0);
  }
}

TEST_CASE("json output format round-trips through audit") {
  const std::string dir = tmp_dir("jsonfmt");
  ExperimentSpec spec = couple_spec(dir);
  spec.format = OutputFormat::json;
  const RunResult result = run_experiment(spec, false);
  CHECK(result.exit_code == 0);
  CHECK(fs::exists(dir + "/msd.json"));
  const nlohmann::json audit = nlohmann::json::parse(audit_run(dir));
  CHECK(audit.at("match").get<bool>());
}

TEST_CASE("resolved config reproduces the spec") {
  const ExperimentSpec spec = couple_spec("somewhere");
  const ExperimentSpec round = parse_experiment(resolved_config_json(spec));
  CHECK(round.kind == spec.kind);
  CHECK(round.seed == spec.seed);
  CHECK(round.sim.dimension == spec.sim.dimension);
  CHECK(round.sim.dt == spec.sim.dt);
  CHECK(round.initial == spec.initial);
  CHECK(round.ou.beta == spec.ou.beta);
}
