// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

namespace spherelab {

// Lexicographic enumeration of index pairs (i < j) in dimension n:
// (0,1),(0,2),...,(0,n-1),(1,2),...,(n-2,n-1).

inline std::size_t pair_count(std::size_t n) { return n * (n - 1) / 2; }

inline std::size_t pair_index(std::size_t n, std::size_t i, std::size_t j) {
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

inline void pair_from_index(std::size_t n, std::size_t p, std::size_t& i,
                            std::size_t& j) {
  i = 0;
  std::size_t row = n - 1;
  while (p >= row) {
    p -= row;
    --row;
    ++i;
  }
  j = i + 1 + p;
}

}  // namespace spherelab
