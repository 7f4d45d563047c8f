// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spherelab/noise.hpp"

namespace spherelab {

// Velocity state: D real components constrained to the sphere of radius
// sqrt(D) in reduced units (exactly for rotation/jump steppers, within a
// measured drift for Euler-Maruyama without renormalization).
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(std::vector<double> components);

  std::size_t dimension() const { return components_.size(); }
  double norm_sq() const;

  std::span<const double> view() const { return components_; }
  std::span<double> mutable_view() { return components_; }
  const std::vector<double>& components() const { return components_; }
  double operator[](std::size_t i) const { return components_[i]; }

  // Rescales to the given squared radius (used by per-step renormalization).
  void rescale_to(double radius_sq);

 private:
  std::vector<double> components_;
};

enum class IntegratorKind { ito_em, strat_heun, rotation, kac_jump };
enum class RenormPolicy { none, per_step };

// Distribution of the non-tagged initial components on the residual sphere.
// Only the uniform law is implemented; the knob exists because any
// exchangeable law on the residual sphere is admissible.
enum class ResidualLaw { uniform };

const char* to_string(IntegratorKind k);
const char* to_string(RenormPolicy p);
IntegratorKind integrator_from_string(const std::string& s);
RenormPolicy renorm_from_string(const std::string& s);

struct SimConfig {
  std::size_t dimension = 100;
  double dt = 1e-3;
  double horizon = 1.0;
  std::size_t ensemble = 1000;
  std::uint64_t seed = 1;
  IntegratorKind integrator = IntegratorKind::ito_em;
  RenormPolicy renorm = RenormPolicy::per_step;
  double radius_tol = 1e-8;
  std::vector<std::size_t> tagged = {0};
  // kac_jump integrator only: jump-angle support parameter.
  double epsilon = 0.25;
  // rotation integrator only: 0 = exact (all pairs per step); a positive
  // value rotates only that many uniformly chosen pairs per step with the
  // angle variance rescaled to keep the total angular diffusivity.
  std::size_t rotation_pairs_per_step = 0;

  void validate() const;
  std::size_t steps() const;
};

// Uniform sample on the sphere of radius sqrt(D): normalized Gaussian vector.
// Consumes Family::init, channels 0..D-1, step 0.
StateVector sample_uniform_sphere(std::size_t dimension,
                                  const NoiseStream& rng);

// First |c| components equal c exactly; the rest are distributed on the
// residual sphere of squared radius D - |c|^2 in the orthogonal complement.
// Consumes Family::init, channels |c|..D-1, step 0.
StateVector make_initial_state(std::span<const double> tagged_values,
                               std::size_t dimension, const NoiseStream& rng,
                               ResidualLaw law = ResidualLaw::uniform);

// w -> sigma(v) w with sigma_ij = delta_ij - v_i v_j / |v|^2: the orthogonal
// projection onto the tangent hyperplane at v. Idempotent and self-adjoint.
std::vector<double> project_tangent(const StateVector& v,
                                    std::span<const double> w);

// In-place form used by the steppers.
void project_tangent_inplace(std::span<const double> v, double v_norm_sq,
                             std::span<double> w);

}  // namespace spherelab
