#pragma once

#include <stdexcept>
#include <string>

namespace gzero {

// Bad user-supplied configuration or input files. CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A round aborted (e.g. the curated dataset came out empty). CLI exit code 3.
struct RoundAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Model backend failure. CLI exit code 4.
struct BackendError : std::runtime_error {
  enum class Kind { unavailable, capability, alignment, protocol };
  BackendError(Kind kind, const std::string& what) : std::runtime_error(what), kind(kind) {}
  Kind kind;
};

// Non-finite value surfaced inside an optimizer computation.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gzero
