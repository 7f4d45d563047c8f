// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "spherelab/pairs.hpp"
#include "spherelab/state.hpp"

namespace spherelab {

// Law of the per-event rotation angle. Must be even with support
// [-epsilon*pi, epsilon*pi]; only the uniform law is built in, the enum is
// the plug point for other admissible laws.
enum class AngleLaw { uniform };

// Which clock drives the pair collisions:
//  - lambda_eps: every pair jumps at rate 1/epsilon^2 (aggregate rate
//    P / epsilon^2 over P = D(D-1)/2 pairs);
//  - tau_n: one collision in the whole system per mean time 1/(D-1)
//    (aggregate rate D-1), the Kac-walk normalization.
enum class ClockConvention { lambda_eps, tau_n };

struct JumpConfig {
  std::size_t dimension = 10;  // N: number of velocity components
  double epsilon = 0.25;       // angle support parameter, in (0, 1]
  double horizon = 1.0;
  std::uint64_t seed = 1;
  AngleLaw angle_law = AngleLaw::uniform;
  ClockConvention clock = ClockConvention::lambda_eps;
  std::uint64_t event_budget = 200'000'000;

  void validate() const;
  double pair_rate() const;       // per-pair event rate
  double aggregate_rate() const;  // total event rate
};

struct JumpEvent {
  double time;
  std::uint32_t i;
  std::uint32_t j;
  double theta;
};

// Pathwise record of one jump trajectory. The state is piecewise constant and
// right-continuous: state_at(t) is the state after the last event at or
// before t.
class JumpTrajectory {
 public:
  JumpTrajectory(StateVector initial, double horizon);

  const StateVector& initial() const { return initial_; }
  const StateVector& terminal() const { return terminal_; }
  const std::vector<JumpEvent>& events() const { return events_; }
  const std::vector<std::uint64_t>& pair_counts() const { return pair_counts_; }
  double horizon() const { return horizon_; }
  bool truncated() const { return truncated_; }

  StateVector state_at(double t) const;

  // Monotone accessor for sampling the path at increasing times in O(events)
  // total. Times queried must be nondecreasing.
  class Cursor {
   public:
    explicit Cursor(const JumpTrajectory& traj);
    const StateVector& advance_to(double t);

   private:
    const JumpTrajectory& traj_;
    StateVector state_;
    std::size_t next_ = 0;
  };
  Cursor cursor() const { return Cursor(*this); }

 private:
  friend JumpTrajectory simulate_kac(const JumpConfig&, const StateVector&,
                                     const NoiseStream&);
  StateVector initial_;
  StateVector terminal_;
  std::vector<JumpEvent> events_;
  std::vector<std::uint64_t> pair_counts_;
  double horizon_ = 0.0;
  bool truncated_ = false;
};

// Exact planar rotation of components (i, j) by angle theta:
//   (V_i, V_j) -> (V_i cos t + V_j sin t, V_j cos t - V_i sin t).
// |V| is preserved exactly (to rounding). i == j is an invalid pair.
StateVector rotate_pair(const StateVector& v, std::size_t i, std::size_t j,
                        double theta);

// Event-driven simulation: one aggregate exponential clock, uniform pair
// selection, angle drawn from the configured law. Deterministic given
// (config, noise). If the event budget is hit the trajectory is returned
// truncated (truncated() == true) with all events generated so far.
JumpTrajectory simulate_kac(const JumpConfig& config,
                            const StateVector& initial,
                            const NoiseStream& noise);

// Ratio (diffusion time) / (jump time) that matches the jump generator to the
// rotation-generator diffusion: per-pair angular diffusivity of the jump
// process is lambda_eps * Var(theta) = pi^2/3 per unit time (uniform law,
// independent of epsilon), while the diffusion accrues 1/R^2 per unit time.
double diffusion_clock_ratio(double epsilon, double radius_sq);

struct DiffusionLimitRow {
  double epsilon;
  double ks_distance;
  double ks_se;        // asymptotic null SE of the two-sample KS statistic
  double clock_ratio;  // diffusion time per unit jump time
};

struct DiffusionLimitReport {
  std::vector<DiffusionLimitRow> rows;
  double horizon;       // comparison time on the diffusion clock
  std::size_t ensemble;
};

// KS distance between the time-T laws of V_1 under the jump process (clock
// rescaled as above) and under the rotation-stepper diffusion, for each
// epsilon. `epsilons` must be decreasing.
DiffusionLimitReport diffusion_limit_report(
    std::size_t dimension, const StateVector& initial,
    const std::vector<double>& epsilons, double horizon, std::size_t ensemble,
    std::uint64_t seed, double reference_dt = 1e-3, std::size_t workers = 0);

}  // namespace spherelab
