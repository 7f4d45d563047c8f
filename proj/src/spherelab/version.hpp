// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace spherelab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace spherelab
