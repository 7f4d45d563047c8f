// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "spherelab/state.hpp"

namespace spherelab {

// Density of one coordinate of the uniform distribution on the sphere of
// radius sqrt(N) in R^N:
//   nu_N(y) = (|S^{N-2}| / |S^{N-1}|) (1 - y^2/N)^{(N-3)/2} N^{-1/2}
// on [-sqrt(N), sqrt(N)], zero outside. The sphere-measure ratio is evaluated
// in log space via lgamma. For N = 2 the density diverges (integrably) at the
// support endpoints.
double nu_density(double y, std::size_t n);

// Tabulated CDF of nu_N by quadrature. The integral is computed in the
// substituted variable y = sqrt(N) sin(phi), where the integrand cos^{N-2}phi
// is smooth over [-pi/2, pi/2] for every N >= 2.
class MarginalLaw {
 public:
  explicit MarginalLaw(std::size_t n, std::size_t quad_intervals = 8192);

  std::size_t dimension() const { return n_; }
  double density(double y) const { return nu_density(y, n_); }
  double cdf(double y) const;
  // |integral of the density over the support - 1|
  double normalization_error() const;

 private:
  std::size_t n_;
  double sqrt_n_;
  double norm_;                // quadrature value of the full integral
  std::vector<double> cum_;    // cumulative integral at the phi grid nodes
  double h_;                   // phi grid spacing
};

// Lift of a point u on the sphere of radius sqrt(N-1) in R^{N-1} and a
// coordinate y to the sphere of radius sqrt(N) in R^N:
//   phi_N(u, y) = (s_N(y) u, y),  s_N(y) = sqrt((N - y^2)/(N - 1)).
// If u and y are distributed uniformly resp. by nu_N, the result is uniform.
StateVector lift_phi(const StateVector& u, double y, double radius_tol = 1e-8);

}  // namespace spherelab
