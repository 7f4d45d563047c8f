// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#include "spherelab/estimators.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/poisson.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "spherelab/errors.hpp"
#include "spherelab/runner.hpp"
#include "spherelab/summary.hpp"

namespace spherelab {

void OUParams::validate() const {
  if (!(beta > 0.0)) throw_invalid_spec("OU friction beta must be positive");
}

OUMoments ou_baseline(double c, double t, const OUParams& params) {
  params.validate();
  const double decay = std::exp(-params.beta * t);
  return {c * decay,
          params.alpha * params.alpha * (1.0 - decay * decay) /
              (2.0 * params.beta)};
}

CovariationSeries quadratic_covariation(const Trajectory& traj, std::size_t i,
                                        std::size_t j) {
  if (!traj.has_martingale) {
    throw_runtime("quadratic_covariation needs martingale capture enabled");
  }
  const std::size_t n = traj.dimension();
  if (i >= n || j >= n) throw_runtime("quadratic_covariation: index out of range");
  const std::size_t steps = traj.times.size() - 1;
  CovariationSeries out;
  out.times = traj.times;
  out.covariation.assign(steps + 1, 0.0);
  out.sigma_integral.assign(steps + 1, 0.0);
  auto sigma_ij = [&](const StateVector& v) {
    const double delta = i == j ? 1.0 : 0.0;
    return delta - v[i] * v[j] / v.norm_sq();
  };
  double prev_sigma = sigma_ij(traj.states[0]);
  for (std::size_t k = 0; k < steps; ++k) {
    const double* m = traj.martingale_increments.data() + k * n;
    out.covariation[k + 1] = out.covariation[k] + m[i] * m[j];
    const double cur_sigma = sigma_ij(traj.states[k + 1]);
    const double dt = traj.times[k + 1] - traj.times[k];
    out.sigma_integral[k + 1] =
        out.sigma_integral[k] + 0.5 * (prev_sigma + cur_sigma) * dt;
    prev_sigma = cur_sigma;
  }
  return out;
}

ChaosMetric chaos_metric(std::span<const double> rows, std::size_t d) {
  if (d < 2) throw_runtime("chaos_metric needs at least two tagged components");
  if (rows.size() % d != 0 || rows.size() / d < 2) {
    throw_runtime("chaos_metric: malformed sample rows");
  }
  const std::size_t m = rows.size() / d;
  ChaosMetric out;
  out.d = d;
  out.covariance.assign(d * d, 0.0);
  out.sq_covariance.assign(d * d, 0.0);
  std::vector<CovAccumulator> acc(d * d);
  std::vector<CovAccumulator> acc_sq(d * d);
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = rows.data() + r * d;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) {
        acc[i * d + j].add(row[i], row[j]);
        acc_sq[i * d + j].add(row[i] * row[i], row[j] * row[j]);
      }
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      out.covariance[i * d + j] = out.covariance[j * d + i] =
          acc[i * d + j].covariance();
      out.sq_covariance[i * d + j] = out.sq_covariance[j * d + i] =
          acc_sq[i * d + j].covariance();
    }
  }
  double score = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double den =
          std::sqrt(out.covariance[i * d + i] * out.covariance[j * d + j]);
      const double den_sq = std::sqrt(out.sq_covariance[i * d + i] *
                                      out.sq_covariance[j * d + j]);
      if (den > 0.0) {
        score = std::max(score, std::abs(out.covariance[i * d + j]) / den);
      }
      if (den_sq > 0.0) {
        score =
            std::max(score, std::abs(out.sq_covariance[i * d + j]) / den_sq);
      }
    }
  }
  out.score = score;
  return out;
}

ChiSquareResult chi_square_poisson(std::span<const std::uint64_t> counts,
                                   double mu) {
  if (counts.size() < 20) {
    throw_runtime("chi_square_poisson needs at least 20 count samples");
  }
  const double total = static_cast<double>(counts.size());
  boost::math::poisson_distribution<double> pois(mu);
  // Bin consecutive count values so that every expected cell is >= 5; the
  // remaining upper tail forms the last bin.
  std::vector<std::uint64_t> upper;  // inclusive upper count value per bin
  std::vector<double> expected;
  double bin_mass = 0.0;
  double tail = 1.0;
  const std::uint64_t k_guard =
      static_cast<std::uint64_t>(mu + 20.0 * std::sqrt(mu) + 30.0);
  for (std::uint64_t k = 0; tail * total >= 10.0 && k <= k_guard; ++k) {
    const double pk = boost::math::pdf(pois, static_cast<double>(k));
    bin_mass += pk;
    tail -= pk;
    if (bin_mass * total >= 5.0) {
      upper.push_back(k);
      expected.push_back(bin_mass * total);
      bin_mass = 0.0;
    }
  }
  expected.push_back((tail + bin_mass) * total);
  upper.push_back(UINT64_MAX);
  if (expected.back() < 5.0 && expected.size() >= 2) {
    expected[expected.size() - 2] += expected.back();
    expected.pop_back();
    upper.pop_back();
    upper.back() = UINT64_MAX;
  }
  if (expected.size() < 2) {
    throw_runtime("chi_square_poisson: degenerate binning, need more samples");
  }
  std::vector<double> observed(expected.size(), 0.0);
  for (std::uint64_t c : counts) {
    std::size_t bin = 0;
    while (c > upper[bin]) ++bin;
    observed[bin] += 1.0;
  }
  double stat = 0.0;
  for (std::size_t b = 0; b < expected.size(); ++b) {
    const double d = observed[b] - expected[b];
    stat += d * d / expected[b];
  }
  const std::size_t dof = expected.size() - 1;
  const double p =
      boost::math::gamma_q(static_cast<double>(dof) / 2.0, stat / 2.0);
  return {stat, dof, p};
}

MeanSe mean_se(std::span<const double> values) {
  Accumulator acc;
  for (double v : values) acc.add(v);
  return {acc.mean, acc.se()};
}

ConditionalMoments conditional_increment_moments(const SimConfig& config,
                                                 std::size_t tagged,
                                                 double band,
                                                 std::size_t workers) {
  config.validate();
  if (tagged >= config.dimension) {
    throw_runtime("conditional_increment_moments: tagged index out of range");
  }
  const std::size_t steps = config.steps();
  const std::size_t m = config.ensemble;
  std::vector<Accumulator> drift(m);
  std::vector<Accumulator> diff(m);
  parallel_trajectories(m, workers, [&](std::size_t traj) {
    NoiseStream rng(config.seed, traj);
    StateVector init = sample_uniform_sphere(config.dimension, rng);
    PathDriver driver(config, init, rng);
    double prev = driver.state()[tagged];
    for (std::size_t k = 0; k < steps; ++k) {
      driver.advance();
      const double cur = driver.state()[tagged];
      if (std::abs(prev) < band) {
        const double dv = cur - prev;
        drift[traj].add(dv / config.dt);
        diff[traj].add(dv * dv / config.dt);
      }
      prev = cur;
    }
  });
  Accumulator all_drift, all_diff;
  for (std::size_t t = 0; t < m; ++t) {
    all_drift.merge(drift[t]);
    all_diff.merge(diff[t]);
  }
  if (all_drift.n < 2) {
    throw_runtime("conditional_increment_moments: no samples in band");
  }
  return {all_drift.mean, all_drift.se(), all_diff.mean, all_diff.se(),
          all_drift.n};
}

}  // namespace spherelab
