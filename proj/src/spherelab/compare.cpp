// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "spherelab/errors.hpp"
#include "spherelab/experiment.hpp"

namespace spherelab {
namespace {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_runtime("cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw_runtime("malformed json in '" + path + "': " + e.what());
  }
  return doc;
}

Table load_table(const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    const json doc = load_json(path);
    Table table;
    table.columns = doc.at("columns").get<std::vector<std::string>>();
    for (const auto& row : doc.at("rows")) {
      table.add_row(row.get<std::vector<double>>());
    }
    return table;
  }
  return read_csv(path);
}

void flatten(const json& node, const std::string& prefix,
             std::map<std::string, std::string>& out) {
  if (node.is_object()) {
    for (const auto& item : node.items()) {
      flatten(item.value(),
              prefix.empty() ? item.key() : prefix + "." + item.key(), out);
    }
  } else {
    out[prefix] = node.dump();
  }
}

// Value/SE column pairing convention: the SE column directly follows its
// value column and is named "se" or "<value>_se".
bool is_se_of(const std::string& value_col, const std::string& next_col) {
  return next_col == "se" || next_col == value_col + "_se";
}

}  // namespace

std::string compare_runs(const std::string& manifest_a,
                         const std::string& manifest_b) {
  const json ma = load_json(manifest_a);
  const json mb = load_json(manifest_b);
  const std::string kind_a = ma.at("experiment").get<std::string>();
  const std::string kind_b = mb.at("experiment").get<std::string>();
  if (kind_a != kind_b) {
    throw_runtime("cannot compare runs of different kinds ('" + kind_a +
                  "' vs '" + kind_b + "')");
  }

  json report;
  report["experiment"] = kind_a;

  std::map<std::string, std::string> flat_a, flat_b;
  flatten(ma.at("config"), "", flat_a);
  flatten(mb.at("config"), "", flat_b);
  // Run placement and stream identity are not configuration in the
  // comparison sense: two runs that differ only in seed or output location
  // have an empty config diff (their statistics are then compared in SE
  // units).
  for (auto* flat : {&flat_a, &flat_b}) {
    flat->erase("seed");
    flat->erase("workers");
    flat->erase("output.dir");
    flat->erase("output.format");
  }
  report["seed_a"] = ma.at("config").value("seed", 0ULL);
  report["seed_b"] = mb.at("config").value("seed", 0ULL);
  json config_diffs = json::array();
  for (const auto& [key, value] : flat_a) {
    auto it = flat_b.find(key);
    if (it == flat_b.end()) {
      config_diffs.push_back({{"key", key}, {"a", value}, {"b", nullptr}});
    } else if (it->second != value) {
      config_diffs.push_back({{"key", key}, {"a", value}, {"b", it->second}});
    }
  }
  for (const auto& [key, value] : flat_b) {
    if (!flat_a.count(key)) {
      config_diffs.push_back({{"key", key}, {"a", nullptr}, {"b", value}});
    }
  }
  report["config_diffs"] = config_diffs;
  report["identical_config"] = config_diffs.empty();

  const std::string dir_a =
      std::filesystem::path(manifest_a).parent_path().string();
  const std::string dir_b =
      std::filesystem::path(manifest_b).parent_path().string();
  json stat_diffs = json::array();
  for (const auto& file : ma.at("outputs")) {
    const std::string name = file.get<std::string>();
    if (name == "summary.json") continue;
    bool in_b = false;
    for (const auto& fb : mb.at("outputs")) {
      if (fb.get<std::string>() == name) in_b = true;
    }
    if (!in_b) continue;
    const Table ta = load_table(dir_a.empty() ? name : dir_a + "/" + name);
    const Table tb = load_table(dir_b.empty() ? name : dir_b + "/" + name);
    if (ta.columns != tb.columns || ta.rows.size() != tb.rows.size()) {
      stat_diffs.push_back({{"file", name}, {"shape_mismatch", true}});
      continue;
    }
    for (std::size_t c = 0; c + 1 < ta.columns.size(); ++c) {
      if (!is_se_of(ta.columns[c], ta.columns[c + 1])) continue;
      double max_dist = 0.0;
      double ratio_sum = 0.0;
      std::size_t ratio_n = 0;
      for (std::size_t r = 0; r < ta.rows.size(); ++r) {
        const double va = ta.rows[r][c];
        const double vb = tb.rows[r][c];
        const double se =
            std::sqrt(ta.rows[r][c + 1] * ta.rows[r][c + 1] +
                      tb.rows[r][c + 1] * tb.rows[r][c + 1]);
        if (se > 0.0) {
          max_dist = std::max(max_dist, std::abs(va - vb) / se);
        } else if (va != vb) {
          max_dist = HUGE_VAL;
        }
        if (vb != 0.0) {
          ratio_sum += va / vb;
          ++ratio_n;
        }
      }
      stat_diffs.push_back(
          {{"file", name},
           {"column", ta.columns[c]},
           {"max_se_distance", max_dist},
           {"consistent", max_dist <= 3.0},
           {"mean_ratio",
            ratio_n > 0 ? ratio_sum / static_cast<double>(ratio_n) : 0.0}});
    }
  }
  report["stat_diffs"] = stat_diffs;
  return report.dump(2);
}

std::string audit_run(const std::string& run_dir) {
  const json manifest = load_json(run_dir + "/manifest.json");
  const ExperimentSpec spec =
      parse_experiment(manifest.at("config").dump());
  const json summary = load_json(run_dir + "/summary.json");

  std::map<std::string, Table> tables;
  for (const auto& file : manifest.at("outputs")) {
    const std::string name = file.get<std::string>();
    if (name == "summary.json") continue;
    const std::size_t dot = name.find_last_of('.');
    tables.emplace(name.substr(0, dot), load_table(run_dir + "/" + name));
  }

  json report;
  report["run_dir"] = run_dir;
  json mismatches = json::array();
  if (manifest.at("partial").get<bool>()) {
    report["partial"] = true;
    report["match"] = summary.at("checks").empty();
    return report.dump(2);
  }
  const std::vector<CheckResult> recomputed = evaluate_checks(spec, tables);
  const json& stored = summary.at("checks");
  if (stored.size() != recomputed.size()) {
    mismatches.push_back({{"reason", "check count differs"},
                          {"stored", stored.size()},
                          {"recomputed", recomputed.size()}});
  } else {
    for (std::size_t i = 0; i < recomputed.size(); ++i) {
      const auto& s = stored[i];
      const auto& r = recomputed[i];
      if (s.at("name").get<std::string>() != r.name ||
          s.at("pass").get<bool>() != r.pass ||
          s.at("value").get<double>() != r.value ||
          s.at("threshold").get<double>() != r.threshold) {
        mismatches.push_back({{"name", r.name},
                              {"stored_pass", s.at("pass").get<bool>()},
                              {"recomputed_pass", r.pass},
                              {"stored_value", s.at("value").get<double>()},
                              {"recomputed_value", r.value}});
      }
    }
  }
  report["checks"] = recomputed.size();
  report["mismatches"] = mismatches;
  report["match"] = mismatches.empty();
  return report.dump(2);
}

}  // namespace spherelab
