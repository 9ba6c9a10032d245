#pragma once

#include <stdexcept>
#include <string>

namespace vtsnn {

/// Failure categories. Each maps to a distinct CLI exit code.
enum class ErrorKind {
  invalid_argument = 1,
  io = 3,
  parse = 4,
  validation = 5,
  shape = 6,
  config = 7,
  divergence = 8,
  stratification = 9,
  index = 10,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::shape: return "shape";
    case ErrorKind::config: return "config";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::stratification: return "stratification";
    case ErrorKind::index: return "index";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace vtsnn
