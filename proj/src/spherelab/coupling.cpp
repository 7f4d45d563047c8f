// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#include "spherelab/coupling.hpp"

#include <cmath>

#include "spherelab/errors.hpp"
#include "spherelab/runner.hpp"
#include "spherelab/summary.hpp"

namespace spherelab {

void step_ou(std::span<double> x, std::span<const double> dw, double dt,
             const OUParams& params) {
  if (x.size() != dw.size()) throw_runtime("step_ou: dimension mismatch");
  for (std::size_t j = 0; j < x.size(); ++j) {
    x[j] += params.alpha * dw[j] - params.beta * x[j] * dt;
  }
}

void step_ou_exact(std::span<double> x, std::span<const double> dw, double dt,
                   const OUParams& params) {
  if (x.size() != dw.size()) throw_runtime("step_ou_exact: dimension mismatch");
  const double decay = std::exp(-params.beta * dt);
  // Rescales dw (variance dt) to the exact one-step noise variance.
  const double gain =
      params.alpha *
      std::sqrt((1.0 - decay * decay) / (2.0 * params.beta * dt));
  for (std::size_t j = 0; j < x.size(); ++j) {
    x[j] = x[j] * decay + gain * dw[j];
  }
}

double gronwall_bound(double v0_ms, double c1_sq, std::size_t dimension,
                      double horizon, double t) {
  if (t < 0.0 || t > horizon) {
    throw_runtime("gronwall_bound: t must lie in [0, T]");
  }
  const double d = static_cast<double>(dimension);
  const double prefactor =
      3.0 * v0_ms + (3.0 / (2.0 * d)) * (1.0 + horizon / (2.0 * d)) *
                        (2.0 * c1_sq * horizon + horizon * horizon);
  return prefactor * std::exp(1.5 * horizon * t);
}

double theory_ev1sq(double c1_sq, std::size_t dimension, double t) {
  const double d = static_cast<double>(dimension);
  return d + (c1_sq - d) * std::exp(-t / d);
}

double ev1sq_relaxation(double c1_sq, double t) {
  return 1.0 + (c1_sq - 1.0) * std::exp(-t);
}

CouplingReport run_coupled(const SimConfig& config, std::span<const double> c,
                           const CoupleOptions& options) {
  config.validate();
  options.params.validate();
  const std::size_t d = c.size();
  if (d == 0) throw_invalid_spec("run_coupled: tagged initial data is empty");
  if (config.tagged.size() != d) {
    throw_invalid_spec("run_coupled: tagged index count must match |c|");
  }
  double csq = 0.0;
  for (double v : c) csq += v * v;
  if (csq > static_cast<double>(config.dimension)) {
    throw_runtime("run_coupled: infeasible initial data, |c|^2 > D");
  }
  // Tagged channels must be the leading components so that make_initial_state
  // pins them exactly.
  for (std::size_t j = 0; j < d; ++j) {
    if (config.tagged[j] != j) {
      throw_invalid_spec("run_coupled: tagged indices must be 0..d-1");
    }
  }

  const std::size_t checkpoints = options.checkpoints;
  const std::size_t steps = config.steps();
  const std::size_t m = config.ensemble;
  const double sqrt_dt = std::sqrt(config.dt);
  const Family ou_family = options.independent_noise
                               ? Family::couple_independent
                               : Family::sphere_noise;

  const std::vector<std::size_t> cp_steps = checkpoint_steps(steps, checkpoints);

  // Per-trajectory rows: |v|^2 and V_tagged0^2 at each checkpoint.
  std::vector<double> rows_msd(m * (checkpoints + 1));
  std::vector<double> rows_v1sq(m * (checkpoints + 1));
  parallel_trajectories(m, options.workers, [&](std::size_t traj) {
    NoiseStream rng(config.seed, traj);
    StateVector init = make_initial_state(c, config.dimension, rng);
    PathDriver driver(config, init, rng);
    std::vector<double> x(c.begin(), c.end());
    std::vector<double> dw(d);
    auto record = [&](std::size_t cp) {
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = driver.state()[config.tagged[j]] - x[j];
        dist += diff * diff;
      }
      rows_msd[traj * (checkpoints + 1) + cp] = dist;
      const double v0 = driver.state()[config.tagged[0]];
      rows_v1sq[traj * (checkpoints + 1) + cp] = v0 * v0;
    };
    record(0);
    std::size_t next_cp = 1;
    while (next_cp <= checkpoints && cp_steps[next_cp] == 0) record(next_cp++);
    for (std::size_t k = 0; k < steps; ++k) {
      for (std::size_t j = 0; j < d; ++j) {
        dw[j] = rng.gaussian(ou_family, config.tagged[j], k) * sqrt_dt;
      }
      driver.advance();
      if (options.ou_exact) {
        step_ou_exact(x, dw, config.dt, options.params);
      } else {
        step_ou(x, dw, config.dt, options.params);
      }
      while (next_cp <= checkpoints && cp_steps[next_cp] == k + 1) {
        record(next_cp);
        ++next_cp;
      }
    }
  });

  CouplingReport report;
  report.dimension = config.dimension;
  report.tagged_count = d;
  report.initial.assign(c.begin(), c.end());
  report.times.resize(checkpoints + 1);
  report.msd.resize(checkpoints + 1);
  report.msd_se.resize(checkpoints + 1);
  report.bound.resize(checkpoints + 1);
  report.ev1sq.resize(checkpoints + 1);
  report.ev1sq_se.resize(checkpoints + 1);
  for (std::size_t cp = 0; cp <= checkpoints; ++cp) {
    const double t = static_cast<double>(cp_steps[cp]) * config.dt;
    Accumulator msd_acc, v1_acc;
    for (std::size_t traj = 0; traj < m; ++traj) {
      msd_acc.add(rows_msd[traj * (checkpoints + 1) + cp]);
      v1_acc.add(rows_v1sq[traj * (checkpoints + 1) + cp]);
    }
    report.times[cp] = t;
    report.msd[cp] = msd_acc.mean;
    report.msd_se[cp] = msd_acc.se();
    report.bound[cp] = gronwall_bound(0.0, csq, config.dimension,
                                      config.horizon, t);
    report.ev1sq[cp] = v1_acc.mean;
    report.ev1sq_se[cp] = v1_acc.se();
  }
  return report;
}

}  // namespace spherelab
