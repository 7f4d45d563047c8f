// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#include "spherelab/state.hpp"

#include <cmath>
#include <numeric>

#include "spherelab/errors.hpp"

namespace spherelab {

StateVector::StateVector(std::vector<double> components)
    : components_(std::move(components)) {
  if (components_.size() < 2) {
    throw_runtime("state dimension must be at least 2, got " +
                  std::to_string(components_.size()));
  }
}

double StateVector::norm_sq() const {
  double s = 0.0;
  for (double c : components_) s += c * c;
  return s;
}

void StateVector::rescale_to(double radius_sq) {
  const double n = norm_sq();
  if (n <= 0.0) throw_runtime("cannot rescale a zero state vector");
  const double factor = std::sqrt(radius_sq / n);
  for (double& c : components_) c *= factor;
}

const char* to_string(IntegratorKind k) {
  switch (k) {
    case IntegratorKind::ito_em: return "ito-em";
    case IntegratorKind::strat_heun: return "strat-heun";
    case IntegratorKind::rotation: return "rotation";
    case IntegratorKind::kac_jump: return "kac-jump";
  }
  return "?";
}

const char* to_string(RenormPolicy p) {
  return p == RenormPolicy::none ? "none" : "per-step";
}

IntegratorKind integrator_from_string(const std::string& s) {
  if (s == "ito-em") return IntegratorKind::ito_em;
  if (s == "strat-heun") return IntegratorKind::strat_heun;
  if (s == "rotation") return IntegratorKind::rotation;
  if (s == "kac-jump") return IntegratorKind::kac_jump;
  throw_invalid_spec("unknown integrator '" + s + "'");
}

RenormPolicy renorm_from_string(const std::string& s) {
  if (s == "none") return RenormPolicy::none;
  if (s == "per-step") return RenormPolicy::per_step;
  throw_invalid_spec("unknown renormalization policy '" + s + "'");
}

void SimConfig::validate() const {
  if (dimension < 2) throw_invalid_spec("dimension must be >= 2");
  if (!(dt > 0.0)) throw_invalid_spec("dt must be positive");
  if (!(horizon > 0.0)) throw_invalid_spec("horizon must be positive");
  if (ensemble < 1) throw_invalid_spec("ensemble size must be >= 1");
  if (!(radius_tol > 0.0)) throw_invalid_spec("radius_tol must be positive");
  if (integrator == IntegratorKind::kac_jump && !(epsilon > 0.0 && epsilon <= 1.0)) {
    throw_invalid_spec("epsilon must lie in (0, 1]");
  }
  std::vector<bool> seen(dimension, false);
  for (std::size_t idx : tagged) {
    if (idx >= dimension) throw_invalid_spec("tagged index out of range");
    if (seen[idx]) throw_invalid_spec("tagged indices must be distinct");
    seen[idx] = true;
  }
}

std::size_t SimConfig::steps() const {
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

StateVector sample_uniform_sphere(std::size_t dimension,
                                  const NoiseStream& rng) {
  if (dimension < 2) {
    throw_runtime("sphere sampling needs dimension >= 2, got " +
                  std::to_string(dimension));
  }
  std::vector<double> v(dimension);
  rng.fill_gaussians(Family::init, 0, v);
  double n = 0.0;
  for (double c : v) n += c * c;
  const double factor = std::sqrt(static_cast<double>(dimension) / n);
  for (double& c : v) c *= factor;
  return StateVector(std::move(v));
}

StateVector make_initial_state(std::span<const double> tagged_values,
                               std::size_t dimension, const NoiseStream& rng,
                               ResidualLaw /*law*/) {
  const std::size_t d = tagged_values.size();
  if (dimension < 2 || d > dimension) {
    throw_runtime("infeasible initial data: need |c| <= D and D >= 2");
  }
  double csq = 0.0;
  for (double c : tagged_values) csq += c * c;
  const double residual_sq = static_cast<double>(dimension) - csq;
  if (residual_sq < 0.0) {
    throw_runtime("infeasible initial data: |c|^2 = " + std::to_string(csq) +
                  " exceeds D = " + std::to_string(dimension));
  }

  std::vector<double> v(dimension, 0.0);
  for (std::size_t i = 0; i < d; ++i) v[i] = tagged_values[i];
  if (d == dimension) {
    return StateVector(std::move(v));  // residual radius may be zero
  }
  // Uniform point on the residual sphere in the orthogonal complement.
  double n = 0.0;
  for (std::size_t i = d; i < dimension; ++i) {
    v[i] = rng.gaussian(Family::init, i, 0);
    n += v[i] * v[i];
  }
  const double factor = residual_sq > 0.0 ? std::sqrt(residual_sq / n) : 0.0;
  for (std::size_t i = d; i < dimension; ++i) v[i] *= factor;
  return StateVector(std::move(v));
}

std::vector<double> project_tangent(const StateVector& v,
                                    std::span<const double> w) {
  if (w.size() != v.dimension()) {
    throw_runtime("project_tangent: dimension mismatch");
  }
  const double vsq = v.norm_sq();
  if (vsq <= 0.0) throw_runtime("project_tangent: singular (zero) state");
  std::vector<double> out(w.begin(), w.end());
  project_tangent_inplace(v.view(), vsq, out);
  return out;
}

void project_tangent_inplace(std::span<const double> v, double v_norm_sq,
                             std::span<double> w) {
  double dot = 0.0;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) dot += v[i] * w[i];
  const double a = dot / v_norm_sq;
  for (std::size_t i = 0; i < n; ++i) w[i] -= a * v[i];
}

}  // namespace spherelab
