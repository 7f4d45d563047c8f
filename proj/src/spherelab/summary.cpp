// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#include "spherelab/summary.hpp"

#include "spherelab/errors.hpp"

namespace spherelab {

EnsembleSummary::EnsembleSummary(std::vector<double> times,
                                 std::vector<std::string> channels)
    : times_(std::move(times)), channels_(std::move(channels)) {
  cells_.assign(times_.size() * channels_.size(), Accumulator{});
}

void EnsembleSummary::add(std::size_t checkpoint, std::size_t channel,
                          double value) {
  cells_.at(checkpoint * channels_.size() + channel).add(value);
}

const Accumulator& EnsembleSummary::at(std::size_t checkpoint,
                                       std::size_t channel) const {
  return cells_.at(checkpoint * channels_.size() + channel);
}

void EnsembleSummary::merge(const EnsembleSummary& other) {
  if (other.times_ != times_ || other.channels_ != channels_) {
    throw_runtime("EnsembleSummary::merge: incompatible shapes");
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    cells_[i].merge(other.cells_[i]);
  }
}

}  // namespace spherelab
