// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>

namespace spherelab {

struct KsResult {
  double statistic;
  double p_value;
};

// Survival function of the Kolmogorov distribution, Q(lambda) = P(K > lambda).
double kolmogorov_sf(double lambda);

// Two-sided one-sample Kolmogorov-Smirnov test against a reference CDF.
// Requires at least 20 samples; the p-value uses the asymptotic Kolmogorov
// distribution with the Stephens finite-n adjustment.
KsResult ks_test(std::span<const double> samples,
                 const std::function<double(double)>& cdf);

// Two-sided two-sample Kolmogorov-Smirnov test.
KsResult ks_test_two_sample(std::span<const double> a,
                            std::span<const double> b);

}  // namespace spherelab
