// Copyright 2026 spherelab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace spherelab {

// Error categories. Values match the process exit codes of the CLI and the
// status codes of the C API, so a thrown Error can be propagated verbatim.
enum class ErrorCode : int {
  runtime = 1,          // contract violations, I/O failures, bad arguments
  invalid_spec = 2,     // experiment configuration does not parse or validate
  budget_exceeded = 3,  // configured event/step budget hit; partial results
  check_failed = 4,     // an acceptance check evaluated to fail under --check
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_runtime(const std::string& msg) {
  throw Error(ErrorCode::runtime, msg);
}

[[noreturn]] inline void throw_invalid_spec(const std::string& msg) {
  throw Error(ErrorCode::invalid_spec, msg);
}

[[noreturn]] inline void throw_budget_exceeded(const std::string& msg) {
  throw Error(ErrorCode::budget_exceeded, msg);
}

}  // namespace spherelab
