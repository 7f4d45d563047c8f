// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#include "spherelab/ks.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "spherelab/errors.hpp"

namespace spherelab {
namespace {

double stephens_lambda(double n_eff, double d) {
  const double sn = std::sqrt(n_eff);
  return (sn + 0.12 + 0.11 / sn) * d;
}

}  // namespace

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.0) {
    // Dual theta-series form, rapidly convergent for small lambda.
    const double f = M_PI * M_PI / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int k = 1; k < 40; k += 2) {
      const double term = std::exp(-f * static_cast<double>(k) *
                                   static_cast<double>(k));
      cdf += term;
      if (term < 1e-18) break;
    }
    cdf *= std::sqrt(2.0 * M_PI) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sf = 0.0;
  double sign = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double term =
        std::exp(-2.0 * static_cast<double>(k) * static_cast<double>(k) *
                 lambda * lambda);
    sf += sign * term;
    if (term < 1e-18) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sf, 0.0, 1.0);
}

KsResult ks_test(std::span<const double> samples,
                 const std::function<double(double)>& cdf) {
  if (samples.size() < 20) {
    throw_runtime("ks_test needs at least 20 samples, got " +
                  std::to_string(samples.size()));
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const double hi = (static_cast<double>(i) + 1.0) / n - f;
    const double lo = f - static_cast<double>(i) / n;
    d = std::max(d, std::max(hi, lo));
  }
  return {d, kolmogorov_sf(stephens_lambda(n, d))};
}

KsResult ks_test_two_sample(std::span<const double> a,
                            std::span<const double> b) {
  if (a.size() < 20 || b.size() < 20) {
    throw_runtime("ks_test_two_sample needs at least 20 samples per side");
  }
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  double d = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < sa.size() && ib < sb.size()) {
    const double xa = sa[ia];
    const double xb = sb[ib];
    const double x = std::min(xa, xb);
    if (xa <= x) {
      while (ia < sa.size() && sa[ia] == x) ++ia;
    }
    if (xb <= x) {
      while (ib < sb.size() && sb[ib] == x) ++ib;
    }
    d = std::max(d, std::abs(static_cast<double>(ia) / na -
                             static_cast<double>(ib) / nb));
  }
  const double n_eff = na * nb / (na + nb);
  return {d, kolmogorov_sf(stephens_lambda(n_eff, d))};
}

}  // namespace spherelab
