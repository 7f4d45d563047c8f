// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

#include "spherelab/philox.hpp"

namespace spherelab {

// Channel families. Distinct families are independent streams even when the
// (channel, step) address coincides; this is how the driving Brownian motion,
// the rotation generators and the jump clocks coexist per trajectory.
enum class Family : std::uint64_t {
  sphere_noise = 1,        // driving Brownian increments B_1..B_D
  rotation = 2,            // antisymmetric rotation generators, pair-indexed
  jump_clock = 3,          // exponential waiting times of the aggregate clock
  jump_pair = 4,           // uniform pair selection per event
  jump_angle = 5,          // rotation angle per event
  init = 6,                // initial-state sampling
  couple_independent = 7,  // OU driver decoupled from the sphere (control)
  pair_subset = 8,         // sparse-rotation pair subset selection
};

// Addressable randomness for one trajectory. The same (seed, trajectory,
// family, channel, step) address always yields the same value, on any thread,
// in any evaluation order. Two processes that read the same address share the
// same noise; that is the entire coupling contract.
//
// All deviate kinds at one address are derived from the same underlying
// word, so a family must be used with a single distribution type (the
// Family enum reflects this split).
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t trajectory)
      : key_{seed, trajectory}, seed_(seed), trajectory_(trajectory) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t trajectory() const { return trajectory_; }

  // Standard normal deviate at the address.
  double gaussian(Family family, std::uint64_t channel,
                  std::uint64_t step) const;

  // Standard normals for channels 0..out.size()-1 of one step. Identical to
  // per-channel gaussian() calls, just batched.
  void fill_gaussians(Family family, std::uint64_t step,
                      std::span<double> out) const;

  // Gaussian increments with standard deviation sqrt_dt per channel.
  void fill_increments(Family family, std::uint64_t step, double sqrt_dt,
                       std::span<double> out) const;

  // Uniform deviate in [0, 1).
  double uniform(Family family, std::uint64_t channel,
                 std::uint64_t step) const;

  // Exponential deviate with unit rate.
  double exponential(Family family, std::uint64_t channel,
                     std::uint64_t step) const;

 private:
  Philox4x64::Counter block(Family family, std::uint64_t step,
                            std::uint64_t channel_block,
                            std::uint64_t sub) const {
    return Philox4x64::generate(
        {static_cast<std::uint64_t>(family), step, channel_block, sub}, key_);
  }

  Philox4x64::Key key_;
  std::uint64_t seed_;
  std::uint64_t trajectory_;
};

// Deterministically derives an independent sub-seed from a base seed, used to
// give sub-experiments (per-stepper ensembles, pilot runs) their own streams.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t tag);

}  // namespace spherelab
