// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#include "spherelab/marginal.hpp"

#include <algorithm>
#include <cmath>

#include "spherelab/errors.hpp"

namespace spherelab {

double nu_density(double y, std::size_t n) {
  if (n < 2) throw_runtime("nu_density needs dimension >= 2");
  const double nd = static_cast<double>(n);
  if (y * y > nd) return 0.0;
  const double log_ratio = std::lgamma(nd / 2.0) -
                           std::lgamma((nd - 1.0) / 2.0) -
                           0.5 * std::log(M_PI * nd);
  const double base = 1.0 - y * y / nd;
  const double expo = (nd - 3.0) / 2.0;
  if (base == 0.0) {
    if (expo > 0.0) return 0.0;
    if (expo == 0.0) return std::exp(log_ratio);
    return HUGE_VAL;  // N = 2: integrable endpoint divergence
  }
  return std::exp(log_ratio + expo * std::log(base));
}

MarginalLaw::MarginalLaw(std::size_t n, std::size_t quad_intervals)
    : n_(n), sqrt_n_(std::sqrt(static_cast<double>(n))) {
  if (n < 2) throw_runtime("MarginalLaw needs dimension >= 2");
  if (quad_intervals < 16) throw_runtime("MarginalLaw: too few quad intervals");
  const double nd = static_cast<double>(n);
  // Sphere-measure ratio |S^{N-2}|/|S^{N-1}| alone: the substitution
  // y = sqrt(N) sin(phi) absorbs the density's N^{-1/2} into dy.
  const double log_ratio = std::lgamma(nd / 2.0) -
                           std::lgamma((nd - 1.0) / 2.0) -
                           0.5 * std::log(M_PI);
  const double ratio = std::exp(log_ratio);
  // CDF(y) = ratio * Int_{-pi/2}^{asin(y/sqrt(N))} cos^{N-2}(phi) dphi.
  auto integrand = [&](double phi) {
    const double c = std::cos(phi);
    if (c <= 0.0) return 0.0;
    return ratio * std::pow(c, nd - 2.0);
  };
  h_ = M_PI / static_cast<double>(quad_intervals);
  cum_.assign(quad_intervals + 1, 0.0);
  double a = -M_PI / 2.0;
  double fa = integrand(a);
  for (std::size_t k = 0; k < quad_intervals; ++k) {
    const double b = -M_PI / 2.0 + static_cast<double>(k + 1) * h_;
    const double fm = integrand(0.5 * (a + b));
    const double fb = integrand(b);
    cum_[k + 1] = cum_[k] + h_ / 6.0 * (fa + 4.0 * fm + fb);
    a = b;
    fa = fb;
  }
  norm_ = cum_.back();
}

double MarginalLaw::cdf(double y) const {
  if (y <= -sqrt_n_) return 0.0;
  if (y >= sqrt_n_) return 1.0;
  const double phi = std::asin(y / sqrt_n_);
  const double pos = (phi + M_PI / 2.0) / h_;
  const std::size_t idx = std::min(
      static_cast<std::size_t>(pos), cum_.size() - 2);
  const double frac = pos - static_cast<double>(idx);
  return cum_[idx] + frac * (cum_[idx + 1] - cum_[idx]);
}

double MarginalLaw::normalization_error() const {
  return std::abs(norm_ - 1.0);
}

StateVector lift_phi(const StateVector& u, double y, double radius_tol) {
  const std::size_t n = u.dimension() + 1;
  const double nd = static_cast<double>(n);
  const double expected = nd - 1.0;
  if (std::abs(u.norm_sq() - expected) > radius_tol * expected) {
    throw_runtime("lift_phi: input not on the sphere of radius sqrt(N-1)");
  }
  if (y * y > nd * (1.0 + 1e-12)) {
    throw_runtime("lift_phi: |y| exceeds sqrt(N)");
  }
  const double ysq = std::min(y * y, nd);
  const double s = std::sqrt((nd - ysq) / (nd - 1.0));
  std::vector<double> out;
  out.reserve(n);
  for (double c : u.view()) out.push_back(s * c);
  out.push_back(y);
  return StateVector(std::move(out));
}

}  // namespace spherelab
