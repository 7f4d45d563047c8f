// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0
//
// spherelab command line runner. Talks to the library exclusively through the
// C interface in spherelab/spherelab.h.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "spherelab/spherelab.h"

namespace {

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = -1;
  std::string out_dir;
  std::string format;
  bool check = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "experiment configuration file")
      ->required();
  cmd->add_option("--seed", flags.seed, "override the configured seed")
      ->trigger_on_parse()
      ->each([&flags](const std::string&) { flags.seed_set = true; });
  cmd->add_option("--workers", flags.workers,
                  "worker threads (0 = hardware concurrency)");
  cmd->add_option("--out", flags.out_dir, "override the output directory");
  cmd->add_option("--format", flags.format, "output format: csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_flag("--check", flags.check,
                "evaluate summary checks; exit 4 if any fail");
}

int fail(slab_status status) {
  std::fprintf(stderr, "spherelab: %s\n", slab_last_error());
  return static_cast<int>(status);
}

int run_experiment_command(const std::string& kind, const CommonFlags& flags) {
  slab_experiment* experiment = nullptr;
  slab_status status = slab_experiment_open(flags.config.c_str(), &experiment);
  if (status != SLAB_OK) return fail(status);
  status = slab_experiment_require_kind(experiment, kind.c_str());
  if (status == SLAB_OK && flags.seed_set) {
    status = slab_experiment_override_seed(experiment, flags.seed);
  }
  if (status == SLAB_OK && flags.workers >= 0) {
    status = slab_experiment_override_workers(experiment, flags.workers);
  }
  if (status == SLAB_OK && (!flags.out_dir.empty() || !flags.format.empty())) {
    status = slab_experiment_override_output(
        experiment, flags.out_dir.empty() ? nullptr : flags.out_dir.c_str(),
        flags.format.empty() ? nullptr : flags.format.c_str());
  }
  if (status == SLAB_OK) {
    status = slab_experiment_run(experiment, flags.check ? 1 : 0);
  }
  if (status == SLAB_OK) {
    std::printf("wrote %s\n", slab_experiment_manifest_path(experiment));
  }
  slab_experiment_close(experiment);
  return status == SLAB_OK ? 0 : fail(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spherelab: Monte Carlo laboratory for energy-conserving "
               "N-particle stochastic dynamics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(slab_version()));

  const char* kinds[] = {"simulate", "couple",   "chaos",      "kac",
                         "momentum", "marginal", "covariation"};
  const char* descriptions[] = {
      "sphere diffusion ensembles and tagged-component moments",
      "tagged components coupled to an Ornstein-Uhlenbeck reference",
      "independence metrics of several tagged components",
      "pair-rotation jump process and its diffusion limit",
      "momentum- and energy-conserving N-particle model",
      "single-coordinate marginal of the uniform sphere law",
      "quadratic covariation against the tangent projector"};

  CommonFlags flags[7];
  for (int i = 0; i < 7; ++i) {
    add_common_flags(app.add_subcommand(kinds[i], descriptions[i]), flags[i]);
  }

  std::string compare_a, compare_b, audit_dir;
  CLI::App* compare =
      app.add_subcommand("compare", "diff two run manifests");
  compare->add_option("manifest_a", compare_a, "first manifest.json")
      ->required();
  compare->add_option("manifest_b", compare_b, "second manifest.json")
      ->required();
  CLI::App* audit = app.add_subcommand(
      "audit", "recompute summary verdicts from a run's stored files");
  audit->add_option("run_dir", audit_dir, "run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  for (int i = 0; i < 7; ++i) {
    if (app.got_subcommand(kinds[i])) {
      return run_experiment_command(kinds[i], flags[i]);
    }
  }
  if (app.got_subcommand("compare")) {
    char* report = nullptr;
    const slab_status status =
        slab_compare_runs(compare_a.c_str(), compare_b.c_str(), &report);
    if (status != SLAB_OK) return fail(status);
    std::printf("%s\n", report);
    slab_string_free(report);
    return 0;
  }
  if (app.got_subcommand("audit")) {
    char* report = nullptr;
    const slab_status status = slab_audit_run(audit_dir.c_str(), &report);
    if (status != SLAB_OK) return fail(status);
    std::printf("%s\n", report);
    slab_string_free(report);
    return 0;
  }
  return 0;
}
