// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spherelab/pairs.hpp"
#include "spherelab/state.hpp"

namespace spherelab {

// Coefficients of the tagged-component decomposition at a state V:
//   dV_1 = sigma1 dB_1 - ((D-1)/2) b1 dt - h . dB_U
// with sigma1 = 1 - V_1^2/|V|^2, b1 = V_1/|V|^2 and h = b1 * U, where U is V
// with the tagged component removed. sigma1 + V_1 * b1 = 1 exactly.
struct SplitCoefficients {
  double sigma1 = 0.0;
  double b1 = 0.0;
  std::vector<double> h;
};

SplitCoefficients split_coefficients(const StateVector& v, std::size_t tagged);

// One Euler-Maruyama step of the tangent-projected Ito equation
//   dV = sigma(V) dB - ((n-1)/2) V/|V|^2 dt,
// optionally rescaled back to the input radius. dw must carry variance dt per
// channel.
StateVector step_ito_em(const StateVector& v, std::span<const double> dw,
                        double dt, RenormPolicy renorm);

// Heun predictor-corrector step of the Stratonovich form dV = sigma(V) o dB.
StateVector step_strat_heun(const StateVector& v, std::span<const double> dw,
                            double dt, RenormPolicy renorm = RenormPolicy::none);

// Composition of exact pairwise Givens rotations, pairs (i<j) in lexicographic
// order (0,1),(0,2),...,(D-2,D-1). The plane rotation convention is
//   (V_i, V_j) -> (V_i cos t + V_j sin t, V_j cos t - V_i sin t).
// `omega` is the full antisymmetric D x D increment matrix, row-major;
// non-antisymmetric input is a contract violation.
StateVector step_rotation(const StateVector& v,
                          const std::vector<double>& omega, double dt);

// Same rotation step on upper-triangle angles in lexicographic pair order.
StateVector step_rotation_packed(const StateVector& v,
                                 std::span<const double> angles);

// Grid trajectory of a sphere diffusion.
struct Trajectory {
  std::vector<double> times;        // K+1 grid points
  std::vector<StateVector> states;  // states[k] at times[k]
  IntegratorKind integrator = IntegratorKind::ito_em;
  double target_radius_sq = 0.0;
  std::vector<double> radius_drift;  // |V(t_k)|^2 - target
  // Per-step martingale increments (K x D, row-major), captured on request.
  std::vector<double> martingale_increments;
  bool has_martingale = false;

  std::size_t dimension() const {
    return states.empty() ? 0 : states.front().dimension();
  }
};

// Full grid trajectory under the configured stepper; deterministic given
// (config, initial, noise). Set capture_martingale to store the per-step
// martingale increments for covariation estimates (memory: K*D doubles).
Trajectory simulate_path(const SimConfig& config, const StateVector& initial,
                         const NoiseStream& noise,
                         bool capture_martingale = false);

// Streaming stepper core shared by simulate_path and the ensemble
// experiments. Observer signature:
//   void(std::size_t step, double time, std::span<const double> state)
// called at step 0 (initial state) and after every step. When mart_out is
// non-empty it receives the current step's martingale increments.
class PathDriver {
 public:
  PathDriver(const SimConfig& config, const StateVector& initial,
             const NoiseStream& noise);

  std::span<const double> state() const { return v_; }
  double time() const { return static_cast<double>(step_) * config_.dt; }
  std::size_t step() const { return step_; }
  double target_radius_sq() const { return target_radius_sq_; }

  // Advances one step; martingale increments are written to mart_out when its
  // size equals the dimension.
  void advance(std::span<double> mart_out = {});

 private:
  void advance_ito(std::span<double> mart_out);
  void advance_heun(std::span<double> mart_out);
  void advance_rotation(std::span<double> mart_out);

  SimConfig config_;
  const NoiseStream& noise_;
  std::vector<double> v_;
  std::vector<double> dw_;
  std::vector<double> scratch_;
  std::vector<double> scratch2_;
  double target_radius_sq_ = 0.0;
  double sqrt_dt_ = 0.0;
  double angle_scale_ = 0.0;
  std::size_t step_ = 0;
};

// Halves dt until the measured Euler-Maruyama radius drift per unit time
// (without renormalization) falls below 1e-3 * D. Pilot-based, deterministic.
double calibrate_dt(const SimConfig& config);

}  // namespace spherelab
