// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace spherelab {

// Streaming mean/variance accumulator (Welford), mergeable.
struct Accumulator {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const Accumulator& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(o.n);
    const double d = o.mean - mean;
    mean += d * nb / (na + nb);
    m2 += o.m2 + d * d * na * nb / (na + nb);
    n += o.n;
  }

  double variance() const {
    return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
  }
  double se() const {
    return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
};

// Mergeable covariance accumulator for one channel pair.
struct CovAccumulator {
  std::size_t n = 0;
  double mean_x = 0.0;
  double mean_y = 0.0;
  double cxy = 0.0;

  void add(double x, double y) {
    ++n;
    const double dx = x - mean_x;
    mean_x += dx / static_cast<double>(n);
    mean_y += (y - mean_y) / static_cast<double>(n);
    cxy += dx * (y - mean_y);
  }

  void merge(const CovAccumulator& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(o.n);
    cxy += o.cxy +
           (mean_x - o.mean_x) * (mean_y - o.mean_y) * na * nb / (na + nb);
    mean_x += (o.mean_x - mean_x) * nb / (na + nb);
    mean_y += (o.mean_y - mean_y) * nb / (na + nb);
    n += o.n;
  }

  double covariance() const {
    return n > 1 ? cxy / static_cast<double>(n - 1) : 0.0;
  }
};

// Time-indexed Monte Carlo summary: one accumulator per (checkpoint, channel).
// merge() of two summaries over disjoint trajectory sets equals the summary
// of the union up to floating-point reassociation.
class EnsembleSummary {
 public:
  EnsembleSummary() = default;
  EnsembleSummary(std::vector<double> times, std::vector<std::string> channels);

  const std::vector<double>& times() const { return times_; }
  const std::vector<std::string>& channels() const { return channels_; }

  void add(std::size_t checkpoint, std::size_t channel, double value);
  const Accumulator& at(std::size_t checkpoint, std::size_t channel) const;

  void merge(const EnsembleSummary& other);

 private:
  std::vector<double> times_;
  std::vector<std::string> channels_;
  std::vector<Accumulator> cells_;  // checkpoint-major
};

}  // namespace spherelab
