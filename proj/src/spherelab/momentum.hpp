// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "spherelab/estimators.hpp"
#include "spherelab/state.hpp"

namespace spherelab {

// N three-dimensional particle velocities with fixed total momentum N*u0 and
// energy N*e0. The fluctuation energy per particle eps0 = e0 - |u0|^2/2 must
// be positive.
struct MomentumState {
  std::size_t particles = 0;       // N
  std::vector<double> velocities;  // 3N, particle-major
  std::array<double, 3> u0{0.0, 0.0, 0.0};
  double e0 = 1.5;

  double epsilon0() const {
    return e0 - 0.5 * (u0[0] * u0[0] + u0[1] * u0[1] + u0[2] * u0[2]);
  }
  // Squared radius of the fluctuation sphere, 2 N eps0.
  double fluctuation_radius_sq() const {
    return 2.0 * static_cast<double>(particles) * epsilon0();
  }
  std::array<double, 3> momentum_residual() const;  // sum_k Vk - N u0
  double energy_residual() const;                   // sum |V|^2/2 - N e0
  void validate(double tol) const;
};

// Applies the manifold projector P(S) = sigma(S) - sum_g E^g E^g^T / N to w
// in place, where S is the 3N fluctuation vector and E^g repeats the g-th
// unit vector of R^3. P annihilates S and, on the manifold, each E^g.
void apply_momentum_projector(std::span<const double> s, std::span<double> w);

// One Heun step of dV = P(S) o dB (unit noise amplitude). Momentum is
// conserved exactly by construction; energy within tolerance, or exactly
// under per-step renormalization of the fluctuation part.
MomentumState step_momentum(const MomentumState& state,
                            std::span<const double> dw, double dt,
                            RenormPolicy renorm = RenormPolicy::per_step);

// Orthogonal change of coordinates splitting the constant-momentum component
// from the fluctuation sphere:
//   s_n = sqrt((N-n)/(N-n+1)) [ V_n - (1/(N-n)) sum_{i>n} V_i ],  n < N
//   s_N = (1/sqrt(N)) sum_i V_i.
// Forward and inverse are O(N); the matrix is orthogonal, so |s| = |V|.
class GramSchmidtMap {
 public:
  explicit GramSchmidtMap(std::size_t particles);

  std::size_t particles() const { return n_; }
  std::vector<double> forward(std::span<const double> v) const;
  std::vector<double> inverse(std::span<const double> s) const;

  // Entry R[n][k] of the particle-level map (coefficient of particle k's
  // velocity in s_n, and of s_n in particle k's inverse). 1-based n, k.
  double entry(std::size_t n, std::size_t k) const;

 private:
  std::size_t n_;
  std::vector<double> a_;  // a[n] = sqrt((N-n)/(N-n+1)), 1-based
};

struct MomentumConfig {
  std::size_t particles = 100;  // N
  std::size_t tagged = 1;       // m tagged particles
  std::vector<std::array<double, 3>> initial;  // c_k, defaults to (1,0,0)...
  std::array<double, 3> u0{0.0, 0.0, 0.0};
  double e0 = 1.5;  // eps0 = 3/2 => unit per-component variance at equilibrium
  double dt = 1e-3;
  double horizon = 1.0;
  std::size_t ensemble = 100;
  std::uint64_t seed = 1;
  std::size_t checkpoints = 10;
  double radius_tol = 1e-8;
  // Cross-check path: simulate the projected equation in the full 3N
  // coordinates instead of the reduced fluctuation sphere.
  bool direct_stepper = false;

  void validate() const;
  double epsilon0() const {
    return e0 - 0.5 * (u0[0] * u0[0] + u0[1] * u0[1] + u0[2] * u0[2]);
  }
  // Limit OU parameters implied by the model: alpha = 1, beta = 3/(4 eps0).
  OUParams limit_ou() const { return {1.0, 3.0 / (4.0 * epsilon0())}; }
};

// Tagged velocities u0 + c_k for k < m; the remaining N - m particles are
// drawn on the residual manifold (affine shift to restore total momentum,
// then radial rescale of the fluctuation parts to restore energy).
MomentumState make_momentum_initial(const MomentumConfig& config,
                                    const NoiseStream& rng);

struct Prop1Report {
  std::vector<double> times;
  // msd[k][cp]: E|S_k(t) - X_k(t)|^2 for tagged particle k.
  std::vector<std::vector<double>> msd;
  std::vector<std::vector<double>> msd_se;
  // Cross covariance of the two leading tagged particles at the final time
  // (3x3, row-major), with a matching SE estimate; empty when m < 2.
  std::vector<double> cross_cov;
  std::vector<double> cross_cov_se;
  double max_momentum_residual = 0.0;  // max over steps of |sum dV|_inf
  double max_energy_residual = 0.0;    // max over checkpoints
  std::size_t particles = 0;
  std::size_t tagged = 0;
  OUParams ou;
};

// Couples each tagged fluctuation S_k = V_k - u0 to a 3-dimensional OU
// reference driven by the particle's own noise block B~_k; reports the
// mean-square coupling distance and tagged cross covariances.
Prop1Report run_prop1(const MomentumConfig& config, std::size_t workers = 0);

struct CompensatedNoiseReport {
  std::vector<double> times;
  std::vector<double> msd;     // E[|(1/N) sum_k B~_k(t)|^2]
  std::vector<double> msd_se;
  std::vector<double> theory;  // 3 t / N
};

// Mean square of the compensator (1/N) sum_k B~_k(t): equals 3t/N.
CompensatedNoiseReport compensated_noise_check(std::size_t particles,
                                               double horizon,
                                               std::size_t checkpoints,
                                               std::size_t ensemble,
                                               std::uint64_t seed,
                                               std::size_t workers = 0);

}  // namespace spherelab
