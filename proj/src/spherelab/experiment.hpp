// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spherelab/estimators.hpp"
#include "spherelab/kac.hpp"
#include "spherelab/momentum.hpp"
#include "spherelab/state.hpp"
#include "spherelab/table.hpp"

namespace spherelab {

enum class ExperimentKind {
  simulate,
  couple,
  chaos,
  kac,
  momentum,
  marginal,
  covariation,
};

const char* to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

enum class OutputFormat { csv, json };

// Fully resolved experiment description. The resolved configuration
// (defaults filled in) is echoed into the run manifest; re-running it
// reproduces the numeric outputs byte for byte.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::simulate;
  std::uint64_t seed = 1;
  std::size_t workers = 0;
  std::string out_dir = "out";
  OutputFormat format = OutputFormat::csv;

  SimConfig sim;                        // simulate/couple/chaos/covariation
  std::vector<double> initial = {1.0};  // tagged initial data
  bool dt_auto = false;
  std::size_t checkpoints = 10;
  std::vector<std::string> checks;      // simulate: extra named checks

  // couple
  OUParams ou;
  bool couple_independent_noise = false;
  bool couple_ou_exact = false;

  // chaos
  double chaos_threshold_safety = 1.5;

  // kac
  JumpConfig jump;
  std::vector<double> jump_epsilons;
  std::size_t jump_ensemble = 1000;
  std::vector<double> jump_initial = {1.0};
  bool jump_diffusion_compare = true;
  double jump_diffusion_horizon = 1.0;
  double jump_reference_dt = 1e-3;
  std::size_t jump_limit_ensemble = 10000;

  // momentum
  MomentumConfig momentum;
  bool momentum_compensated = false;
  std::size_t momentum_checkpoints = 10;

  // marginal
  std::size_t marginal_dimension = 3;
  std::size_t marginal_samples = 100000;
  bool marginal_compare_normal = false;
  bool marginal_lift_check = false;
  std::size_t marginal_quad_intervals = 8192;

  // covariation
  std::vector<std::pair<std::size_t, std::size_t>> cov_pairs = {
      {0, 0}, {1, 1}, {0, 1}};
  std::vector<std::string> cov_representations = {"ito", "rotation"};
  std::size_t cov_checkpoints = 10;
  double cov_rel_tol = 0.05;
  double cov_ref_floor = 0.02;
};

// Resolved configuration document (all defaults explicit) as stored in the
// run manifest.
std::string resolved_config_json(const ExperimentSpec& spec);

// Parses and validates a configuration document (strict: unknown keys are
// errors; parse errors carry line/column positions).
ExperimentSpec parse_experiment(const std::string& json_text);
ExperimentSpec load_experiment(const std::string& config_path);

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string comparator;  // "<=", ">=", ...
  std::string details;
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 3 budget exceeded, 4 check failed (with checks)
  bool partial = false;
  std::string manifest_path;
  std::vector<CheckResult> checks;
  std::vector<std::string> outputs;
};

// Runs the experiment, writing the manifest, the per-quantity series files
// and summary.json under spec.out_dir. When with_checks is true a failing
// check yields exit code 4.
RunResult run_experiment(const ExperimentSpec& spec, bool with_checks);

// Pass/fail verdicts as a pure function of the output tables (and the spec's
// thresholds), shared by run_experiment and audit_run so verdicts recompute
// identically from the stored files.
std::vector<CheckResult> evaluate_checks(
    const ExperimentSpec& spec, const std::map<std::string, Table>& tables);

// Diff of two run manifests of the same experiment kind: configuration
// differences plus SE-normalized distances of shared statistics columns.
std::string compare_runs(const std::string& manifest_a,
                         const std::string& manifest_b);

// Recomputes the summary verdicts from the stored series files and reports
// whether they match summary.json.
std::string audit_run(const std::string& run_dir);

}  // namespace spherelab
