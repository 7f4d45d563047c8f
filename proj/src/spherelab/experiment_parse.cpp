// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spherelab/errors.hpp"
#include "spherelab/experiment.hpp"

namespace spherelab {
namespace {

using nlohmann::json;

[[noreturn]] void parse_error_with_position(const std::string& text,
                                            std::size_t byte,
                                            const std::string& what) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  std::ostringstream msg;
  msg << "config parse error at line " << line << ", column " << col << ": "
      << what;
  throw_invalid_spec(msg.str());
}

void expect_keys(const json& obj, const std::string& section,
                 const std::set<std::string>& allowed) {
  if (!obj.is_object()) {
    throw_invalid_spec("'" + section + "' must be an object");
  }
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw_invalid_spec("unknown key '" +
                         (section.empty() ? item.key()
                                          : section + "." + item.key()) +
                         "'");
    }
  }
}

double get_double(const json& obj, const std::string& section,
                  const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) {
    throw_invalid_spec("'" + section + "." + key + "' must be a number");
  }
  return v.get<double>();
}

std::uint64_t get_uint(const json& obj, const std::string& section,
                       const std::string& key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) {
    throw_invalid_spec("'" + section + "." + key +
                       "' must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

bool get_bool(const json& obj, const std::string& section,
              const std::string& key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) {
    throw_invalid_spec("'" + section + "." + key + "' must be a boolean");
  }
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& section,
                       const std::string& key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) {
    throw_invalid_spec("'" + section + "." + key + "' must be a string");
  }
  return v.get<std::string>();
}

std::vector<double> get_double_array(const json& obj,
                                     const std::string& section,
                                     const std::string& key,
                                     std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array()) {
    throw_invalid_spec("'" + section + "." + key + "' must be an array");
  }
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) {
      throw_invalid_spec("'" + section + "." + key +
                         "' must contain numbers only");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

void parse_sim(const json& obj, ExperimentSpec& spec) {
  expect_keys(obj, "sim",
              {"dimension", "dt", "horizon", "ensemble", "integrator",
               "renormalize", "radius_tol", "tagged", "initial", "checkpoints",
               "epsilon", "rotation_pairs_per_step"});
  spec.sim.dimension = get_uint(obj, "sim", "dimension", 100);
  if (obj.contains("dt")) {
    const json& dt = obj.at("dt");
    if (dt.is_string()) {
      if (dt.get<std::string>() != "auto") {
        throw_invalid_spec("'sim.dt' must be a number or \"auto\"");
      }
      spec.dt_auto = true;
    } else if (dt.is_number()) {
      spec.sim.dt = dt.get<double>();
    } else {
      throw_invalid_spec("'sim.dt' must be a number or \"auto\"");
    }
  }
  spec.sim.horizon = get_double(obj, "sim", "horizon", 1.0);
  spec.sim.ensemble = get_uint(obj, "sim", "ensemble", 1000);
  spec.sim.integrator =
      integrator_from_string(get_string(obj, "sim", "integrator", "ito-em"));
  spec.sim.renorm =
      renorm_from_string(get_string(obj, "sim", "renormalize", "per-step"));
  spec.sim.radius_tol = get_double(obj, "sim", "radius_tol", 1e-8);
  if (obj.contains("tagged")) {
    const json& tg = obj.at("tagged");
    if (!tg.is_array()) throw_invalid_spec("'sim.tagged' must be an array");
    spec.sim.tagged.clear();
    for (const auto& e : tg) {
      if (!e.is_number_unsigned()) {
        throw_invalid_spec("'sim.tagged' must contain nonnegative integers");
      }
      spec.sim.tagged.push_back(e.get<std::size_t>());
    }
  }
  spec.initial = get_double_array(obj, "sim", "initial", {1.0});
  spec.checkpoints = get_uint(obj, "sim", "checkpoints", 10);
  if (spec.checkpoints < 1) {
    throw_invalid_spec("'sim.checkpoints' must be at least 1");
  }
  spec.sim.epsilon = get_double(obj, "sim", "epsilon", 0.25);
  spec.sim.rotation_pairs_per_step =
      get_uint(obj, "sim", "rotation_pairs_per_step", 0);
}

void parse_kac(const json& obj, ExperimentSpec& spec) {
  expect_keys(obj, "kac",
              {"dimension", "epsilons", "horizon", "ensemble", "clock",
               "event_budget", "initial", "diffusion_compare",
               "diffusion_horizon", "reference_dt", "limit_ensemble"});
  spec.jump.dimension = get_uint(obj, "kac", "dimension", 10);
  spec.jump_epsilons =
      get_double_array(obj, "kac", "epsilons", {0.5, 0.25, 0.125});
  if (spec.jump_epsilons.empty()) {
    throw_invalid_spec("'kac.epsilons' must not be empty");
  }
  for (double e : spec.jump_epsilons) {
    if (!(e > 0.0 && e <= 1.0)) {
      throw_invalid_spec("'kac.epsilons' entries must lie in (0, 1]");
    }
  }
  spec.jump.epsilon = spec.jump_epsilons.front();
  spec.jump.horizon = get_double(obj, "kac", "horizon", 1.0);
  spec.jump_ensemble = get_uint(obj, "kac", "ensemble", 1000);
  const std::string clock = get_string(obj, "kac", "clock", "lambda-eps");
  if (clock == "lambda-eps") {
    spec.jump.clock = ClockConvention::lambda_eps;
  } else if (clock == "tau-n") {
    spec.jump.clock = ClockConvention::tau_n;
  } else {
    throw_invalid_spec("'kac.clock' must be 'lambda-eps' or 'tau-n'");
  }
  spec.jump.event_budget =
      get_uint(obj, "kac", "event_budget", spec.jump.event_budget);
  spec.jump_initial = get_double_array(obj, "kac", "initial", {1.0});
  spec.jump_diffusion_compare =
      get_bool(obj, "kac", "diffusion_compare", true);
  spec.jump_diffusion_horizon =
      get_double(obj, "kac", "diffusion_horizon", 1.0);
  spec.jump_reference_dt = get_double(obj, "kac", "reference_dt", 1e-3);
  spec.jump_limit_ensemble = get_uint(obj, "kac", "limit_ensemble", 10000);
}

void parse_momentum(const json& obj, ExperimentSpec& spec) {
  expect_keys(obj, "momentum",
              {"particles", "tagged", "initial", "u0", "e0", "dt", "horizon",
               "ensemble", "checkpoints", "direct_stepper",
               "compensated_noise"});
  spec.momentum.particles = get_uint(obj, "momentum", "particles", 100);
  spec.momentum.tagged = get_uint(obj, "momentum", "tagged", 1);
  if (obj.contains("initial")) {
    const json& init = obj.at("initial");
    if (!init.is_array()) {
      throw_invalid_spec("'momentum.initial' must be an array of 3-vectors");
    }
    spec.momentum.initial.clear();
    for (const auto& e : init) {
      if (!e.is_array() || e.size() != 3) {
        throw_invalid_spec("'momentum.initial' entries must be 3-vectors");
      }
      std::array<double, 3> v{};
      for (int g = 0; g < 3; ++g) {
        if (!e[g].is_number()) {
          throw_invalid_spec("'momentum.initial' entries must be numeric");
        }
        v[g] = e[g].get<double>();
      }
      spec.momentum.initial.push_back(v);
    }
  }
  if (obj.contains("u0")) {
    const json& u0 = obj.at("u0");
    if (!u0.is_array() || u0.size() != 3) {
      throw_invalid_spec("'momentum.u0' must be a 3-vector");
    }
    for (int g = 0; g < 3; ++g) {
      if (!u0[g].is_number()) {
        throw_invalid_spec("'momentum.u0' must be numeric");
      }
      spec.momentum.u0[g] = u0[g].get<double>();
    }
  }
  spec.momentum.e0 = get_double(obj, "momentum", "e0", 1.5);
  spec.momentum.dt = get_double(obj, "momentum", "dt", 1e-3);
  spec.momentum.horizon = get_double(obj, "momentum", "horizon", 1.0);
  spec.momentum.ensemble = get_uint(obj, "momentum", "ensemble", 100);
  spec.momentum.checkpoints = get_uint(obj, "momentum", "checkpoints", 10);
  spec.momentum_checkpoints = spec.momentum.checkpoints;
  spec.momentum.direct_stepper =
      get_bool(obj, "momentum", "direct_stepper", false);
  spec.momentum_compensated =
      get_bool(obj, "momentum", "compensated_noise", false);
}

void parse_marginal(const json& obj, ExperimentSpec& spec) {
  expect_keys(obj, "marginal",
              {"dimension", "samples", "compare_normal", "lift_check",
               "quad_intervals"});
  spec.marginal_dimension = get_uint(obj, "marginal", "dimension", 3);
  spec.marginal_samples = get_uint(obj, "marginal", "samples", 100000);
  spec.marginal_compare_normal =
      get_bool(obj, "marginal", "compare_normal", false);
  spec.marginal_lift_check = get_bool(obj, "marginal", "lift_check", false);
  spec.marginal_quad_intervals =
      get_uint(obj, "marginal", "quad_intervals", 8192);
}

void parse_covariation(const json& obj, ExperimentSpec& spec) {
  expect_keys(obj, "covariation",
              {"pairs", "representations", "checkpoints", "rel_tol",
               "ref_floor"});
  if (obj.contains("pairs")) {
    const json& pairs = obj.at("pairs");
    if (!pairs.is_array()) {
      throw_invalid_spec("'covariation.pairs' must be an array of [i, j]");
    }
    spec.cov_pairs.clear();
    for (const auto& e : pairs) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() ||
          !e[1].is_number_unsigned()) {
        throw_invalid_spec("'covariation.pairs' entries must be [i, j]");
      }
      spec.cov_pairs.emplace_back(e[0].get<std::size_t>(),
                                  e[1].get<std::size_t>());
    }
    if (spec.cov_pairs.empty()) {
      throw_invalid_spec("'covariation.pairs' must not be empty");
    }
  }
  if (obj.contains("representations")) {
    const json& reps = obj.at("representations");
    if (!reps.is_array()) {
      throw_invalid_spec("'covariation.representations' must be an array");
    }
    spec.cov_representations.clear();
    for (const auto& e : reps) {
      const std::string rep = e.is_string() ? e.get<std::string>() : "";
      if (rep != "ito" && rep != "rotation") {
        throw_invalid_spec(
            "'covariation.representations' entries must be 'ito' or "
            "'rotation'");
      }
      spec.cov_representations.push_back(rep);
    }
    if (spec.cov_representations.empty()) {
      throw_invalid_spec("'covariation.representations' must not be empty");
    }
  }
  spec.cov_checkpoints = get_uint(obj, "covariation", "checkpoints", 10);
  if (spec.cov_checkpoints < 1) {
    throw_invalid_spec("'covariation.checkpoints' must be at least 1");
  }
  spec.cov_rel_tol = get_double(obj, "covariation", "rel_tol", 0.05);
  spec.cov_ref_floor = get_double(obj, "covariation", "ref_floor", 0.02);
}

const std::set<std::string> kSimKinds = {"simulate", "couple", "chaos",
                                         "covariation"};

}  // namespace

const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::couple: return "couple";
    case ExperimentKind::chaos: return "chaos";
    case ExperimentKind::kac: return "kac";
    case ExperimentKind::momentum: return "momentum";
    case ExperimentKind::marginal: return "marginal";
    case ExperimentKind::covariation: return "covariation";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  if (s == "simulate") return ExperimentKind::simulate;
  if (s == "couple") return ExperimentKind::couple;
  if (s == "chaos") return ExperimentKind::chaos;
  if (s == "kac") return ExperimentKind::kac;
  if (s == "momentum") return ExperimentKind::momentum;
  if (s == "marginal") return ExperimentKind::marginal;
  if (s == "covariation") return ExperimentKind::covariation;
  throw_invalid_spec("unknown experiment kind '" + s + "'");
}

ExperimentSpec parse_experiment(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    parse_error_with_position(json_text, e.byte, e.what());
  }
  if (!doc.is_object()) throw_invalid_spec("config root must be an object");
  expect_keys(doc, "",
              {"experiment", "seed", "workers", "output", "sim", "checks",
               "couple", "chaos", "kac", "momentum", "marginal",
               "covariation"});
  if (!doc.contains("experiment")) {
    throw_invalid_spec("missing required key 'experiment'");
  }
  ExperimentSpec spec;
  spec.kind = experiment_kind_from_string(
      get_string(doc, "", "experiment", "simulate"));
  spec.seed = get_uint(doc, "", "seed", 1);
  spec.workers = get_uint(doc, "", "workers", 0);
  if (doc.contains("output")) {
    const json& out = doc.at("output");
    expect_keys(out, "output", {"dir", "format"});
    spec.out_dir = get_string(out, "output", "dir", "out");
    const std::string fmt = get_string(out, "output", "format", "csv");
    if (fmt == "csv") {
      spec.format = OutputFormat::csv;
    } else if (fmt == "json") {
      spec.format = OutputFormat::json;
    } else {
      throw_invalid_spec("'output.format' must be 'csv' or 'json'");
    }
  }
  const std::string kind_name = to_string(spec.kind);

  // Sections irrelevant to the experiment kind are rejected rather than
  // silently ignored.
  for (const auto& section :
       {"sim", "couple", "chaos", "kac", "momentum", "marginal",
        "covariation", "checks"}) {
    if (!doc.contains(section)) continue;
    const std::string s = section;
    const bool ok =
        (s == "sim" && kSimKinds.count(kind_name)) ||
        (s == "checks" && kind_name == "simulate") || s == kind_name;
    if (!ok) {
      throw_invalid_spec("section '" + s + "' is not valid for experiment '" +
                         kind_name + "'");
    }
  }

  if (kSimKinds.count(kind_name)) {
    parse_sim(doc.contains("sim") ? doc.at("sim") : json::object(), spec);
  }
  switch (spec.kind) {
    case ExperimentKind::simulate: {
      if (doc.contains("checks")) {
        const json& checks = doc.at("checks");
        if (!checks.is_array()) {
          throw_invalid_spec("'checks' must be an array of check names");
        }
        spec.checks.clear();
        for (const auto& e : checks) {
          const std::string name = e.is_string() ? e.get<std::string>() : "";
          if (name != "moment-ode" && name != "stationarity" &&
              name != "radius-drift") {
            throw_invalid_spec("unknown check '" + name + "'");
          }
          spec.checks.push_back(name);
        }
      } else {
        spec.checks = {"moment-ode"};
      }
      break;
    }
    case ExperimentKind::couple: {
      const json obj = doc.contains("couple") ? doc.at("couple") : json::object();
      expect_keys(obj, "couple",
                  {"alpha", "beta", "independent_noise", "ou_exact"});
      spec.ou.alpha = get_double(obj, "couple", "alpha", 1.0);
      spec.ou.beta = get_double(obj, "couple", "beta", 0.5);
      spec.couple_independent_noise =
          get_bool(obj, "couple", "independent_noise", false);
      spec.couple_ou_exact = get_bool(obj, "couple", "ou_exact", false);
      break;
    }
    case ExperimentKind::chaos: {
      const json obj = doc.contains("chaos") ? doc.at("chaos") : json::object();
      expect_keys(obj, "chaos", {"threshold_safety"});
      spec.chaos_threshold_safety =
          get_double(obj, "chaos", "threshold_safety", 1.5);
      break;
    }
    case ExperimentKind::kac:
      parse_kac(doc.contains("kac") ? doc.at("kac") : json::object(), spec);
      spec.jump.seed = spec.seed;
      break;
    case ExperimentKind::momentum:
      parse_momentum(
          doc.contains("momentum") ? doc.at("momentum") : json::object(),
          spec);
      spec.momentum.seed = spec.seed;
      break;
    case ExperimentKind::marginal:
      parse_marginal(
          doc.contains("marginal") ? doc.at("marginal") : json::object(),
          spec);
      break;
    case ExperimentKind::covariation:
      parse_covariation(doc.contains("covariation") ? doc.at("covariation")
                                                    : json::object(),
                        spec);
      break;
  }

  // Kind-level validation beyond per-field checks.
  if (kSimKinds.count(kind_name)) {
    spec.sim.seed = spec.seed;
    if (!spec.dt_auto) spec.sim.validate();
    if (spec.initial.size() > spec.sim.dimension) {
      throw_invalid_spec("'sim.initial' has more entries than dimensions");
    }
  }
  if (spec.kind == ExperimentKind::couple ||
      spec.kind == ExperimentKind::chaos) {
    if (spec.sim.tagged.size() != spec.initial.size()) {
      throw_invalid_spec(
          "'sim.tagged' and 'sim.initial' must have matching lengths");
    }
  }
  if (spec.kind == ExperimentKind::chaos && spec.sim.tagged.size() < 2) {
    throw_invalid_spec("chaos experiments need at least two tagged indices");
  }
  if (spec.kind == ExperimentKind::covariation) {
    for (const auto& [i, j] : spec.cov_pairs) {
      if (i >= spec.sim.dimension || j >= spec.sim.dimension) {
        throw_invalid_spec("'covariation.pairs' index out of range");
      }
    }
  }
  if (spec.kind == ExperimentKind::momentum) spec.momentum.validate();
  if (spec.kind == ExperimentKind::marginal) {
    if (spec.marginal_dimension < 2) {
      throw_invalid_spec("'marginal.dimension' must be >= 2");
    }
    if (spec.marginal_samples < 20) {
      throw_invalid_spec("'marginal.samples' must be >= 20");
    }
  }
  return spec;
}

ExperimentSpec load_experiment(const std::string& config_path) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    throw_invalid_spec("cannot open config file '" + config_path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (text.empty()) {
    throw_invalid_spec("config file '" + config_path + "' is empty");
  }
  return parse_experiment(text);
}

std::string resolved_config_json(const ExperimentSpec& spec) {
  json doc;
  doc["experiment"] = to_string(spec.kind);
  doc["seed"] = spec.seed;
  doc["workers"] = spec.workers;
  doc["output"] = {{"dir", spec.out_dir},
                   {"format", spec.format == OutputFormat::csv ? "csv" : "json"}};
  const std::string kind_name = to_string(spec.kind);
  if (kSimKinds.count(kind_name)) {
    json sim;
    sim["dimension"] = spec.sim.dimension;
    if (spec.dt_auto) {
      sim["dt"] = spec.sim.dt;  // resolved by calibration before running
      sim["dt_requested"] = "auto";
    } else {
      sim["dt"] = spec.sim.dt;
    }
    sim["horizon"] = spec.sim.horizon;
    sim["ensemble"] = spec.sim.ensemble;
    sim["integrator"] = to_string(spec.sim.integrator);
    sim["renormalize"] = to_string(spec.sim.renorm);
    sim["radius_tol"] = spec.sim.radius_tol;
    sim["tagged"] = spec.sim.tagged;
    sim["initial"] = spec.initial;
    sim["checkpoints"] = spec.checkpoints;
    if (spec.sim.integrator == IntegratorKind::kac_jump) {
      sim["epsilon"] = spec.sim.epsilon;
    }
    if (spec.sim.integrator == IntegratorKind::rotation) {
      sim["rotation_pairs_per_step"] = spec.sim.rotation_pairs_per_step;
    }
    doc["sim"] = sim;
  }
  switch (spec.kind) {
    case ExperimentKind::simulate:
      doc["checks"] = spec.checks;
      break;
    case ExperimentKind::couple:
      doc["couple"] = {{"alpha", spec.ou.alpha},
                       {"beta", spec.ou.beta},
                       {"independent_noise", spec.couple_independent_noise},
                       {"ou_exact", spec.couple_ou_exact}};
      break;
    case ExperimentKind::chaos:
      doc["chaos"] = {{"threshold_safety", spec.chaos_threshold_safety}};
      break;
    case ExperimentKind::kac:
      doc["kac"] = {
          {"dimension", spec.jump.dimension},
          {"epsilons", spec.jump_epsilons},
          {"horizon", spec.jump.horizon},
          {"ensemble", spec.jump_ensemble},
          {"clock", spec.jump.clock == ClockConvention::lambda_eps
                        ? "lambda-eps"
                        : "tau-n"},
          {"event_budget", spec.jump.event_budget},
          {"initial", spec.jump_initial},
          {"diffusion_compare", spec.jump_diffusion_compare},
          {"diffusion_horizon", spec.jump_diffusion_horizon},
          {"reference_dt", spec.jump_reference_dt},
          {"limit_ensemble", spec.jump_limit_ensemble}};
      break;
    case ExperimentKind::momentum: {
      json init = json::array();
      for (const auto& c : spec.momentum.initial) {
        init.push_back({c[0], c[1], c[2]});
      }
      doc["momentum"] = {
          {"particles", spec.momentum.particles},
          {"tagged", spec.momentum.tagged},
          {"initial", init},
          {"u0", {spec.momentum.u0[0], spec.momentum.u0[1],
                  spec.momentum.u0[2]}},
          {"e0", spec.momentum.e0},
          {"dt", spec.momentum.dt},
          {"horizon", spec.momentum.horizon},
          {"ensemble", spec.momentum.ensemble},
          {"checkpoints", spec.momentum.checkpoints},
          {"direct_stepper", spec.momentum.direct_stepper},
          {"compensated_noise", spec.momentum_compensated}};
      break;
    }
    case ExperimentKind::marginal:
      doc["marginal"] = {{"dimension", spec.marginal_dimension},
                         {"samples", spec.marginal_samples},
                         {"compare_normal", spec.marginal_compare_normal},
                         {"lift_check", spec.marginal_lift_check},
                         {"quad_intervals", spec.marginal_quad_intervals}};
      break;
    case ExperimentKind::covariation: {
      json pairs = json::array();
      for (const auto& [i, j] : spec.cov_pairs) pairs.push_back({i, j});
      doc["covariation"] = {{"pairs", pairs},
                            {"representations", spec.cov_representations},
                            {"checkpoints", spec.cov_checkpoints},
                            {"rel_tol", spec.cov_rel_tol},
                            {"ref_floor", spec.cov_ref_floor}};
      break;
    }
  }
  return doc.dump(2);
}

}  // namespace spherelab
