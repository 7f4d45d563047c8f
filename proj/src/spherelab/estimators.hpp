// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spherelab/steppers.hpp"

namespace spherelab {

struct OUParams {
  double alpha = 1.0;  // noise coefficient
  double beta = 0.5;   // friction coefficient

  void validate() const;
};

struct OUMoments {
  double mean;
  double variance;
};

// Closed-form OU moments from deterministic initial value c:
// mean = c e^{-beta t}, variance = alpha^2 (1 - e^{-2 beta t}) / (2 beta).
OUMoments ou_baseline(double c, double t, const OUParams& params);

// Discrete quadratic covariation of the martingale parts of a trajectory
// against the integrated projector entry. The trajectory must have been
// simulated with martingale capture enabled.
struct CovariationSeries {
  std::vector<double> times;           // K+1
  std::vector<double> covariation;     // cumulative sum of dM_i dM_j
  std::vector<double> sigma_integral;  // trapezoid of sigma_ij(V(t)) dt
};

CovariationSeries quadratic_covariation(const Trajectory& traj, std::size_t i,
                                        std::size_t j);

// Independence diagnostics of d tagged components over an ensemble of
// sample rows (row m = values of the d components in trajectory m).
// Both the component values and their squares are scored: on the energy
// sphere the squares carry the constraint-induced correlation (exactly
// -1/(d-1) for exchangeable states when d = D), while the raw values may be
// uncorrelated by sign symmetry alone.
struct ChaosMetric {
  std::size_t d = 0;
  std::vector<double> covariance;     // d x d, row-major
  std::vector<double> sq_covariance;  // d x d covariance of squares
  double score = 0.0;  // max |off-diagonal correlation| over both matrices
};

ChaosMetric chaos_metric(std::span<const double> rows, std::size_t d);

// Chi-square goodness of fit of iid counts against Poisson(mu). Bins the
// observed count values, merging tail bins until every expected cell count is
// at least 5; mu is known, so dof = bins - 1.
struct ChiSquareResult {
  double statistic;
  std::size_t dof;
  double p_value;
};

ChiSquareResult chi_square_poisson(std::span<const std::uint64_t> counts,
                                   double mu);

// Mean and standard error of a sample.
struct MeanSe {
  double mean;
  double se;
};

MeanSe mean_se(std::span<const double> values);

// Conditional small-value moments of the tagged increment: estimates the
// drift and diffusivity of component `tagged` restricted to steps where
// |V_tagged| < band. Used as the small-V1 regime diagnostic.
struct ConditionalMoments {
  double drift;        // E[dV | |V|<band] / dt
  double drift_se;
  double diffusivity;  // E[(dV)^2 | |V|<band] / dt
  double diffusivity_se;
  std::size_t samples;
};

ConditionalMoments conditional_increment_moments(
    const SimConfig& config, std::size_t tagged, double band,
    std::size_t workers);

}  // namespace spherelab
