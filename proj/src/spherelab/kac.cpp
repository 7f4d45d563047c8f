// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#include "spherelab/kac.hpp"

#include <cmath>

#include "spherelab/errors.hpp"
#include "spherelab/ks.hpp"
#include "spherelab/runner.hpp"
#include "spherelab/steppers.hpp"

namespace spherelab {

void JumpConfig::validate() const {
  if (dimension < 2) throw_invalid_spec("jump process needs dimension >= 2");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw_invalid_spec("epsilon must lie in (0, 1]");
  }
  if (!(horizon >= 0.0)) throw_invalid_spec("horizon must be nonnegative");
}

double JumpConfig::pair_rate() const {
  const double pairs = static_cast<double>(pair_count(dimension));
  switch (clock) {
    case ClockConvention::lambda_eps:
      return 1.0 / (epsilon * epsilon);
    case ClockConvention::tau_n:
      return static_cast<double>(dimension - 1) / pairs;
  }
  return 0.0;
}

double JumpConfig::aggregate_rate() const {
  return pair_rate() * static_cast<double>(pair_count(dimension));
}

JumpTrajectory::JumpTrajectory(StateVector initial, double horizon)
    : initial_(initial),
      terminal_(std::move(initial)),
      pair_counts_(pair_count(initial_.dimension()), 0),
      horizon_(horizon) {}

StateVector JumpTrajectory::state_at(double t) const {
  Cursor c(*this);
  return c.advance_to(t);
}

JumpTrajectory::Cursor::Cursor(const JumpTrajectory& traj)
    : traj_(traj), state_(traj.initial()) {}

const StateVector& JumpTrajectory::Cursor::advance_to(double t) {
  const auto& events = traj_.events();
  while (next_ < events.size() && events[next_].time <= t) {
    const JumpEvent& e = events[next_];
    state_ = rotate_pair(state_, e.i, e.j, e.theta);
    ++next_;
  }
  return state_;
}

StateVector rotate_pair(const StateVector& v, std::size_t i, std::size_t j,
                        double theta) {
  if (i == j) throw_runtime("rotate_pair: indices must differ");
  if (i >= v.dimension() || j >= v.dimension()) {
    throw_runtime("rotate_pair: index out of range");
  }
  std::vector<double> out(v.components());
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double vi = out[i];
  const double vj = out[j];
  out[i] = vi * c + vj * s;
  out[j] = vj * c - vi * s;
  return StateVector(std::move(out));
}

JumpTrajectory simulate_kac(const JumpConfig& config,
                            const StateVector& initial,
                            const NoiseStream& noise) {
  config.validate();
  if (initial.dimension() != config.dimension) {
    throw_runtime("simulate_kac: initial state dimension mismatch");
  }
  JumpTrajectory traj(initial, config.horizon);
  const double rate = config.aggregate_rate();
  if (rate <= 0.0 || config.horizon <= 0.0) return traj;

  const std::size_t pairs = pair_count(config.dimension);
  std::vector<double> state(initial.components());
  const double angle_span = config.epsilon * M_PI;
  double t = 0.0;
  std::uint64_t k = 0;
  for (;;) {
    t += noise.exponential(Family::jump_clock, 0, k) / rate;
    if (t >= config.horizon) break;
    if (k >= config.event_budget) {
      traj.truncated_ = true;
      break;
    }
    const double up = noise.uniform(Family::jump_pair, 0, k);
    std::size_t p = static_cast<std::size_t>(up * static_cast<double>(pairs));
    if (p >= pairs) p = pairs - 1;
    std::size_t i, j;
    pair_from_index(config.dimension, p, i, j);
    // Uniform law on [-eps*pi, eps*pi]; even by construction.
    const double theta =
        (2.0 * noise.uniform(Family::jump_angle, 0, k) - 1.0) * angle_span;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double vi = state[i];
    const double vj = state[j];
    state[i] = vi * c + vj * s;
    state[j] = vj * c - vi * s;
    traj.events_.push_back({t, static_cast<std::uint32_t>(i),
                            static_cast<std::uint32_t>(j), theta});
    ++traj.pair_counts_[p];
    ++k;
  }
  traj.terminal_ = StateVector(std::move(state));
  return traj;
}

double diffusion_clock_ratio(double epsilon, double radius_sq) {
  const double lambda = 1.0 / (epsilon * epsilon);
  const double angle_var = (epsilon * M_PI) * (epsilon * M_PI) / 3.0;
  return lambda * angle_var * radius_sq;  // = pi^2 R^2 / 3
}

DiffusionLimitReport diffusion_limit_report(
    std::size_t dimension, const StateVector& initial,
    const std::vector<double>& epsilons, double horizon, std::size_t ensemble,
    std::uint64_t seed, double reference_dt, std::size_t workers) {
  for (std::size_t k = 1; k < epsilons.size(); ++k) {
    if (!(epsilons[k] < epsilons[k - 1])) {
      throw_runtime("diffusion_limit_report: epsilons must be decreasing");
    }
  }
  DiffusionLimitReport report;
  report.horizon = horizon;
  report.ensemble = ensemble;

  // Rotation-stepper reference law of V_1 at the comparison time.
  SimConfig ref;
  ref.dimension = dimension;
  ref.dt = reference_dt;
  ref.horizon = horizon;
  ref.integrator = IntegratorKind::rotation;
  ref.seed = derive_seed(seed, 0xD1FF);
  std::vector<double> reference(ensemble);
  parallel_trajectories(ensemble, workers, [&](std::size_t m) {
    NoiseStream rng(ref.seed, m);
    PathDriver driver(ref, initial, rng);
    const std::size_t steps = ref.steps();
    for (std::size_t s = 0; s < steps; ++s) driver.advance();
    reference[m] = driver.state()[0];
  });

  const double radius_sq = initial.norm_sq();
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    JumpConfig jc;
    jc.dimension = dimension;
    jc.epsilon = epsilons[e];
    jc.seed = derive_seed(seed, 0x3A0 + e);
    const double ratio = diffusion_clock_ratio(jc.epsilon, radius_sq);
    jc.horizon = horizon / ratio;
    std::vector<double> samples(ensemble);
    parallel_trajectories(ensemble, workers, [&](std::size_t m) {
      NoiseStream rng(jc.seed, m);
      JumpTrajectory traj = simulate_kac(jc, initial, rng);
      if (traj.truncated()) {
        throw_budget_exceeded("jump event budget exceeded in limit report");
      }
      samples[m] = traj.terminal()[0];
    });
    const KsResult ks = ks_test_two_sample(samples, reference);
    const double n_eff = static_cast<double>(ensemble) / 2.0;
    report.rows.push_back(
        {jc.epsilon, ks.statistic, 0.26 / std::sqrt(n_eff), ratio});
  }
  return report;
}

}  // namespace spherelab
