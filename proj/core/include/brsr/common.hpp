#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace brsr {

enum class ErrorKind {
  Shape,       // tensor/layer shape contract violated
  Config,      // invalid configuration value
  Io,          // file system / serialization failure
  Numeric,     // non-finite value or numerical contract violation
  Checkpoint,  // checkpoint format/compatibility problem
};

// Single exception type used across the library; the kind maps to a
// distinct process exit code in the CLI.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Checkpoint: return "checkpoint";
  }
  return "unknown";
}

}  // namespace brsr

#define BRSR_REQUIRE(cond, kind, msg)        \
  do {                                       \
    if (!(cond)) ::brsr::fail((kind), (msg)); \
  } while (0)
