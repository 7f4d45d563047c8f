// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace spherelab {

// Number of worker threads: `requested`, or hardware concurrency when 0.
std::size_t resolve_workers(std::size_t requested);

// Evaluates fn(0..count-1) across workers. Each call must write only to its
// own per-index slots in caller-owned storage; reductions are then performed
// sequentially in index order, so results never depend on the worker count.
void parallel_trajectories(std::size_t count, std::size_t workers,
                           const std::function<void(std::size_t)>& fn);

// Step indices of `checkpoints`+1 evenly spaced grid checkpoints (including
// step 0 and the final step).
inline std::vector<std::size_t> checkpoint_steps(std::size_t steps,
                                                 std::size_t checkpoints) {
  std::vector<std::size_t> out(checkpoints + 1);
  for (std::size_t cp = 0; cp <= checkpoints; ++cp) {
    out[cp] = cp * steps / checkpoints;
  }
  return out;
}

}  // namespace spherelab

