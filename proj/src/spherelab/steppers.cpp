// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#include "spherelab/steppers.hpp"

#include <cmath>

#include "spherelab/errors.hpp"
#include "spherelab/kac.hpp"

namespace spherelab {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_sq(std::span<const double> a) { return dot(a, a); }

void rescale(std::span<double> v, double target_sq) {
  const double f = std::sqrt(target_sq / norm_sq(v));
  for (double& c : v) c *= f;
}

}  // namespace

SplitCoefficients split_coefficients(const StateVector& v, std::size_t tagged) {
  if (tagged >= v.dimension()) throw_runtime("tagged index out of range");
  const double vsq = v.norm_sq();
  if (vsq <= 0.0) throw_runtime("split_coefficients: zero state");
  const double v1 = v[tagged];
  SplitCoefficients out;
  out.b1 = v1 / vsq;
  out.sigma1 = 1.0 - v1 * out.b1;  // keeps sigma1 + V1*b1 == 1 exact
  out.h.reserve(v.dimension() - 1);
  for (std::size_t i = 0; i < v.dimension(); ++i) {
    if (i != tagged) out.h.push_back(out.b1 * v[i]);
  }
  return out;
}

StateVector step_ito_em(const StateVector& v, std::span<const double> dw,
                        double dt, RenormPolicy renorm) {
  const std::size_t n = v.dimension();
  if (dw.size() != n) throw_runtime("step_ito_em: increment dimension mismatch");
  const double vsq = v.norm_sq();
  const double a = dot(v.view(), dw) / vsq;
  const double c = static_cast<double>(n - 1) / (2.0 * vsq) * dt;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = v[i] * (1.0 - a - c) + dw[i];
  if (renorm == RenormPolicy::per_step) rescale(out, vsq);
  return StateVector(std::move(out));
}

StateVector step_strat_heun(const StateVector& v, std::span<const double> dw,
                            double /*dt*/, RenormPolicy renorm) {
  const std::size_t n = v.dimension();
  if (dw.size() != n) throw_runtime("step_strat_heun: increment dimension mismatch");
  const double vsq = v.norm_sq();
  const double a = dot(v.view(), dw) / vsq;
  std::vector<double> pred(n);
  for (std::size_t i = 0; i < n; ++i) pred[i] = v[i] + dw[i] - a * v[i];
  const double psq = norm_sq(pred);
  const double ap = dot(pred, dw) / psq;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double noise_v = dw[i] - a * v[i];
    const double noise_p = dw[i] - ap * pred[i];
    out[i] = v[i] + 0.5 * (noise_v + noise_p);
  }
  if (renorm == RenormPolicy::per_step) rescale(out, vsq);
  return StateVector(std::move(out));
}

StateVector step_rotation(const StateVector& v,
                          const std::vector<double>& omega, double /*dt*/) {
  const std::size_t n = v.dimension();
  if (omega.size() != n * n) throw_runtime("step_rotation: matrix size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (omega[i * n + i] != 0.0) {
      throw_runtime("step_rotation: increments must be antisymmetric");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      if (omega[i * n + j] != -omega[j * n + i]) {
        throw_runtime("step_rotation: increments must be antisymmetric");
      }
    }
  }
  std::vector<double> angles;
  angles.reserve(pair_count(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) angles.push_back(omega[i * n + j]);
  }
  return step_rotation_packed(v, angles);
}

StateVector step_rotation_packed(const StateVector& v,
                                 std::span<const double> angles) {
  const std::size_t n = v.dimension();
  if (angles.size() != pair_count(n)) {
    throw_runtime("step_rotation_packed: expected one angle per pair");
  }
  std::vector<double> out(v.components());
  std::size_t p = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++p) {
      const double t = angles[p];
      const double c = std::cos(t);
      const double s = std::sin(t);
      const double vi = out[i];
      const double vj = out[j];
      out[i] = vi * c + vj * s;
      out[j] = vj * c - vi * s;
    }
  }
  return StateVector(std::move(out));
}

PathDriver::PathDriver(const SimConfig& config, const StateVector& initial,
                       const NoiseStream& noise)
    : config_(config), noise_(noise), v_(initial.components()) {
  target_radius_sq_ = norm_sq(v_);
  sqrt_dt_ = std::sqrt(config_.dt);
  // Rotation-generator convention: per-pair angle variance dt / R^2, which
  // reproduces the projected-noise diffusion (drift and covariation included).
  angle_scale_ = std::sqrt(config_.dt / target_radius_sq_);
  const std::size_t n = v_.size();
  dw_.resize(config_.integrator == IntegratorKind::rotation
                 ? (config_.rotation_pairs_per_step > 0
                        ? config_.rotation_pairs_per_step
                        : pair_count(n))
                 : n);
  if (config_.integrator == IntegratorKind::strat_heun) scratch_.resize(n);
  if (config_.integrator == IntegratorKind::strat_heun) scratch2_.resize(n);
}

void PathDriver::advance(std::span<double> mart_out) {
  switch (config_.integrator) {
    case IntegratorKind::ito_em: advance_ito(mart_out); break;
    case IntegratorKind::strat_heun: advance_heun(mart_out); break;
    case IntegratorKind::rotation: advance_rotation(mart_out); break;
    case IntegratorKind::kac_jump:
      throw_runtime("kac-jump paths are driven by the jump module");
  }
  ++step_;
}

void PathDriver::advance_ito(std::span<double> mart_out) {
  const std::size_t n = v_.size();
  noise_.fill_increments(Family::sphere_noise, step_, sqrt_dt_, dw_);
  const double vsq = norm_sq(v_);
  const double a = dot(v_, dw_) / vsq;
  const double c = static_cast<double>(n - 1) / (2.0 * vsq) * config_.dt;
  if (mart_out.size() == n) {
    for (std::size_t i = 0; i < n; ++i) mart_out[i] = dw_[i] - a * v_[i];
  }
  for (std::size_t i = 0; i < n; ++i) v_[i] = v_[i] * (1.0 - a - c) + dw_[i];
  if (config_.renorm == RenormPolicy::per_step) rescale(v_, target_radius_sq_);
}

void PathDriver::advance_heun(std::span<double> mart_out) {
  const std::size_t n = v_.size();
  noise_.fill_increments(Family::sphere_noise, step_, sqrt_dt_, dw_);
  const double vsq = norm_sq(v_);
  const double a = dot(v_, dw_) / vsq;
  for (std::size_t i = 0; i < n; ++i) {
    scratch_[i] = dw_[i] - a * v_[i];          // sigma(V) dW
    scratch2_[i] = v_[i] + scratch_[i];        // predictor
  }
  const double psq = norm_sq(scratch2_);
  const double ap = dot(scratch2_, dw_) / psq;
  for (std::size_t i = 0; i < n; ++i) {
    const double avg = 0.5 * (scratch_[i] + dw_[i] - ap * scratch2_[i]);
    if (mart_out.size() == n) mart_out[i] = avg;
    v_[i] += avg;
  }
  if (config_.renorm == RenormPolicy::per_step) rescale(v_, target_radius_sq_);
}

void PathDriver::advance_rotation(std::span<double> mart_out) {
  const std::size_t n = v_.size();
  if (mart_out.size() == n) {
    for (std::size_t i = 0; i < n; ++i) mart_out[i] = 0.0;
  }
  const std::size_t all_pairs = pair_count(n);
  const std::size_t subset = config_.rotation_pairs_per_step;
  const std::size_t count = subset > 0 ? subset : all_pairs;
  // With a pair subset the variance is rescaled so the total angular
  // diffusivity per step is unchanged (documented approximation).
  const double scale =
      subset > 0 ? angle_scale_ * std::sqrt(static_cast<double>(all_pairs) /
                                            static_cast<double>(subset))
                 : angle_scale_;
  noise_.fill_gaussians(Family::rotation, step_, dw_);
  const bool want_mart = mart_out.size() == n;
  auto rotate = [&](std::size_t i, std::size_t j, double t) {
    const double c = std::cos(t);
    const double s = std::sin(t);
    const double vi = v_[i];
    const double vj = v_[j];
    if (want_mart) {
      mart_out[i] += vj * t;
      mart_out[j] -= vi * t;
    }
    v_[i] = vi * c + vj * s;
    v_[j] = vj * c - vi * s;
  };
  if (subset > 0) {
    for (std::size_t k = 0; k < count; ++k) {
      const double u = noise_.uniform(Family::pair_subset, k, step_);
      std::size_t pick =
          static_cast<std::size_t>(u * static_cast<double>(all_pairs));
      if (pick >= all_pairs) pick = all_pairs - 1;
      std::size_t i, j;
      pair_from_index(n, pick, i, j);
      rotate(i, j, dw_[k] * scale);
    }
  } else {
    std::size_t p = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j, ++p) {
        rotate(i, j, dw_[p] * scale);
      }
    }
  }
}

Trajectory simulate_path(const SimConfig& config, const StateVector& initial,
                         const NoiseStream& noise, bool capture_martingale) {
  config.validate();
  const std::size_t n = initial.dimension();
  if (n != config.dimension) {
    throw_runtime("simulate_path: initial state dimension mismatch");
  }
  const std::size_t steps = config.steps();
  Trajectory traj;
  traj.integrator = config.integrator;
  traj.target_radius_sq = initial.norm_sq();
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.radius_drift.reserve(steps + 1);

  if (config.integrator == IntegratorKind::kac_jump) {
    // Jump process presented on the diffusion clock: grid time t corresponds
    // to jump time t / kappa with kappa = pi^2 R^2 / 3 (uniform angle law).
    JumpConfig jc;
    jc.dimension = config.dimension;
    jc.epsilon = config.epsilon;
    jc.seed = config.seed;
    const double kappa =
        diffusion_clock_ratio(config.epsilon, traj.target_radius_sq);
    jc.horizon = config.horizon / kappa;
    JumpTrajectory jt = simulate_kac(jc, initial, noise);
    for (std::size_t k = 0; k <= steps; ++k) {
      const double t = static_cast<double>(k) * config.dt;
      traj.times.push_back(t);
      traj.states.push_back(jt.state_at(t / kappa));
      traj.radius_drift.push_back(traj.states.back().norm_sq() -
                                  traj.target_radius_sq);
    }
    return traj;
  }

  PathDriver driver(config, initial, noise);
  if (capture_martingale) {
    traj.has_martingale = true;
    traj.martingale_increments.assign(steps * n, 0.0);
  }
  traj.times.push_back(0.0);
  traj.states.push_back(initial);
  traj.radius_drift.push_back(initial.norm_sq() - traj.target_radius_sq);
  std::vector<double> state_copy(n);
  for (std::size_t k = 1; k <= steps; ++k) {
    std::span<double> mart;
    if (capture_martingale) {
      mart = std::span<double>(traj.martingale_increments.data() + (k - 1) * n, n);
    }
    driver.advance(mart);
    traj.times.push_back(static_cast<double>(k) * config.dt);
    auto sv = driver.state();
    state_copy.assign(sv.begin(), sv.end());
    traj.states.emplace_back(state_copy);
    traj.radius_drift.push_back(traj.states.back().norm_sq() -
                                traj.target_radius_sq);
  }
  return traj;
}

double calibrate_dt(const SimConfig& config) {
  SimConfig pilot = config;
  pilot.integrator = IntegratorKind::ito_em;
  pilot.renorm = RenormPolicy::none;
  pilot.horizon = std::min(1.0, config.horizon);
  const double target = 1e-3 * static_cast<double>(config.dimension);
  double dt = config.dt;
  for (int halvings = 0; halvings < 20; ++halvings) {
    pilot.dt = dt;
    double drift = 0.0;
    const int paths = 4;
    for (int m = 0; m < paths; ++m) {
      NoiseStream rng(derive_seed(config.seed, 0xCA11B), m);
      StateVector init = sample_uniform_sphere(config.dimension, rng);
      PathDriver driver(pilot, init, rng);
      const std::size_t steps = pilot.steps();
      for (std::size_t k = 0; k < steps; ++k) driver.advance();
      drift += std::abs(norm_sq(driver.state()) - driver.target_radius_sq());
    }
    drift /= static_cast<double>(paths) * pilot.horizon;
    if (drift < target) return dt;
    dt *= 0.5;
  }
  return dt;
}

}  // namespace spherelab
