// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#include "spherelab/spherelab.h"

#include <cstring>
#include <string>

#include "spherelab/errors.hpp"
#include "spherelab/experiment.hpp"
#include "spherelab/state.hpp"
#include "spherelab/steppers.hpp"
#include "spherelab/version.hpp"

namespace {

thread_local std::string t_last_error;

slab_status to_status(const spherelab::Error& e) {
  t_last_error = e.what();
  switch (e.code()) {
    case spherelab::ErrorCode::invalid_spec: return SLAB_INVALID_SPEC;
    case spherelab::ErrorCode::budget_exceeded: return SLAB_BUDGET_EXCEEDED;
    case spherelab::ErrorCode::check_failed: return SLAB_CHECK_FAILED;
    case spherelab::ErrorCode::runtime: return SLAB_ERROR;
  }
  return SLAB_ERROR;
}

template <typename Fn>
slab_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const spherelab::Error& e) {
    return to_status(e);
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return SLAB_ERROR;
  } catch (...) {
    t_last_error = "unknown error";
    return SLAB_ERROR;
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

struct slab_experiment {
  spherelab::ExperimentSpec spec;
  std::string kind_name;
  std::string manifest_path;
};

struct slab_trajectory {
  spherelab::Trajectory traj;
};

extern "C" {

const char* slab_version(void) { return spherelab::kVersion; }

const char* slab_last_error(void) { return t_last_error.c_str(); }

slab_status slab_experiment_open(const char* config_path,
                                 slab_experiment** out) {
  return guarded([&]() -> slab_status {
    if (!config_path || !out) {
      spherelab::throw_runtime("null argument to slab_experiment_open");
    }
    auto handle = new slab_experiment;
    try {
      handle->spec = spherelab::load_experiment(config_path);
    } catch (...) {
      delete handle;
      throw;
    }
    handle->kind_name = spherelab::to_string(handle->spec.kind);
    *out = handle;
    return SLAB_OK;
  });
}

slab_status slab_experiment_open_text(const char* config_json,
                                      slab_experiment** out) {
  return guarded([&]() -> slab_status {
    if (!config_json || !out) {
      spherelab::throw_runtime("null argument to slab_experiment_open_text");
    }
    auto handle = new slab_experiment;
    try {
      handle->spec = spherelab::parse_experiment(config_json);
    } catch (...) {
      delete handle;
      throw;
    }
    handle->kind_name = spherelab::to_string(handle->spec.kind);
    *out = handle;
    return SLAB_OK;
  });
}

void slab_experiment_close(slab_experiment* experiment) { delete experiment; }

const char* slab_experiment_kind(const slab_experiment* experiment) {
  return experiment ? experiment->kind_name.c_str() : "";
}

slab_status slab_experiment_require_kind(const slab_experiment* experiment,
                                         const char* kind) {
  return guarded([&]() -> slab_status {
    if (!experiment || !kind) {
      spherelab::throw_runtime("null argument to slab_experiment_require_kind");
    }
    if (experiment->kind_name != kind) {
      spherelab::throw_invalid_spec(
          "configuration is for experiment '" + experiment->kind_name +
          "', expected '" + std::string(kind) + "'");
    }
    return SLAB_OK;
  });
}

slab_status slab_experiment_override_seed(slab_experiment* experiment,
                                          uint64_t seed) {
  return guarded([&]() -> slab_status {
    if (!experiment) spherelab::throw_runtime("null experiment handle");
    experiment->spec.seed = seed;
    experiment->spec.sim.seed = seed;
    experiment->spec.jump.seed = seed;
    experiment->spec.momentum.seed = seed;
    return SLAB_OK;
  });
}

slab_status slab_experiment_override_workers(slab_experiment* experiment,
                                             int workers) {
  return guarded([&]() -> slab_status {
    if (!experiment) spherelab::throw_runtime("null experiment handle");
    if (workers < 0) {
      spherelab::throw_invalid_spec("workers must be nonnegative");
    }
    experiment->spec.workers = static_cast<std::size_t>(workers);
    return SLAB_OK;
  });
}

slab_status slab_experiment_override_output(slab_experiment* experiment,
                                            const char* out_dir,
                                            const char* format) {
  return guarded([&]() -> slab_status {
    if (!experiment) spherelab::throw_runtime("null experiment handle");
    if (out_dir) experiment->spec.out_dir = out_dir;
    if (format) {
      const std::string f = format;
      if (f == "csv") {
        experiment->spec.format = spherelab::OutputFormat::csv;
      } else if (f == "json") {
        experiment->spec.format = spherelab::OutputFormat::json;
      } else {
        spherelab::throw_invalid_spec("format must be 'csv' or 'json'");
      }
    }
    return SLAB_OK;
  });
}

slab_status slab_experiment_run(slab_experiment* experiment, int with_checks) {
  return guarded([&]() -> slab_status {
    if (!experiment) spherelab::throw_runtime("null experiment handle");
    const spherelab::RunResult result =
        spherelab::run_experiment(experiment->spec, with_checks != 0);
    experiment->manifest_path = result.manifest_path;
    if (result.exit_code == 3) {
      t_last_error = "budget exceeded; partial outputs flagged in manifest";
      return SLAB_BUDGET_EXCEEDED;
    }
    if (result.exit_code == 4) {
      std::string failed;
      for (const auto& c : result.checks) {
        if (!c.pass) failed += (failed.empty() ? "" : ", ") + c.name;
      }
      t_last_error = "acceptance checks failed: " + failed;
      return SLAB_CHECK_FAILED;
    }
    return SLAB_OK;
  });
}

const char* slab_experiment_manifest_path(const slab_experiment* experiment) {
  return experiment ? experiment->manifest_path.c_str() : "";
}

slab_status slab_compare_runs(const char* manifest_a, const char* manifest_b,
                              char** report_json) {
  return guarded([&]() -> slab_status {
    if (!manifest_a || !manifest_b || !report_json) {
      spherelab::throw_runtime("null argument to slab_compare_runs");
    }
    *report_json = dup_string(spherelab::compare_runs(manifest_a, manifest_b));
    return SLAB_OK;
  });
}

slab_status slab_audit_run(const char* run_dir, char** report_json) {
  return guarded([&]() -> slab_status {
    if (!run_dir || !report_json) {
      spherelab::throw_runtime("null argument to slab_audit_run");
    }
    *report_json = dup_string(spherelab::audit_run(run_dir));
    return SLAB_OK;
  });
}

void slab_string_free(char* text) { delete[] text; }

slab_status slab_simulate_sphere(size_t dimension, double dt, double horizon,
                                 const char* integrator, int renormalize,
                                 uint64_t seed, uint64_t trajectory,
                                 const double* initial,
                                 slab_trajectory** out) {
  return guarded([&]() -> slab_status {
    if (!integrator || !out) {
      spherelab::throw_runtime("null argument to slab_simulate_sphere");
    }
    spherelab::SimConfig config;
    config.dimension = dimension;
    config.dt = dt;
    config.horizon = horizon;
    config.integrator = spherelab::integrator_from_string(integrator);
    config.renorm = renormalize ? spherelab::RenormPolicy::per_step
                                : spherelab::RenormPolicy::none;
    config.seed = seed;
    config.ensemble = 1;
    config.validate();
    spherelab::NoiseStream rng(seed, trajectory);
    spherelab::StateVector init =
        initial ? spherelab::StateVector(
                      std::vector<double>(initial, initial + dimension))
                : spherelab::sample_uniform_sphere(dimension, rng);
    auto handle = new slab_trajectory{
        spherelab::simulate_path(config, init, rng)};
    *out = handle;
    return SLAB_OK;
  });
}

void slab_trajectory_free(slab_trajectory* trajectory) { delete trajectory; }

size_t slab_trajectory_steps(const slab_trajectory* trajectory) {
  return trajectory ? trajectory->traj.times.size() - 1 : 0;
}

size_t slab_trajectory_dimension(const slab_trajectory* trajectory) {
  return trajectory ? trajectory->traj.dimension() : 0;
}

double slab_trajectory_time(const slab_trajectory* trajectory, size_t step) {
  if (!trajectory || step >= trajectory->traj.times.size()) return -1.0;
  return trajectory->traj.times[step];
}

slab_status slab_trajectory_state(const slab_trajectory* trajectory,
                                  size_t step, double* out) {
  return guarded([&]() -> slab_status {
    if (!trajectory || !out) {
      spherelab::throw_runtime("null argument to slab_trajectory_state");
    }
    if (step >= trajectory->traj.states.size()) {
      spherelab::throw_runtime("trajectory step index out of range");
    }
    const auto& state = trajectory->traj.states[step];
    for (std::size_t i = 0; i < state.dimension(); ++i) out[i] = state[i];
    return SLAB_OK;
  });
}

}  // extern "C"
