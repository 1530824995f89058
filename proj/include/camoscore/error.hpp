#pragma once

#include <stdexcept>
#include <string>

namespace camo {

enum class ErrorKind {
  Io,
  Format,
  Shape,
  Parameter,
  DegenerateInput,
  InsufficientBackground,
  Convergence,
  Consistency,
  Config,
};

/// Base class of every error raised by the library. The kind drives the CLI
/// exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define CAMO_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

CAMO_DEFINE_ERROR(IoError, Io)
CAMO_DEFINE_ERROR(FormatError, Format)
CAMO_DEFINE_ERROR(ShapeError, Shape)
CAMO_DEFINE_ERROR(ParameterError, Parameter)
CAMO_DEFINE_ERROR(DegenerateInputError, DegenerateInput)
CAMO_DEFINE_ERROR(InsufficientBackgroundError, InsufficientBackground)
CAMO_DEFINE_ERROR(ConvergenceError, Convergence)
CAMO_DEFINE_ERROR(ConsistencyError, Consistency)
CAMO_DEFINE_ERROR(ConfigError, Config)

#undef CAMO_DEFINE_ERROR

/// Stable CLI exit code: 0 success, 1 I/O or format, 2 degenerate input,
/// 3 configuration.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::Format:
      return 1;
    case ErrorKind::Parameter:
    case ErrorKind::Config:
      return 3;
    default:
      return 2;
  }
}

}  // namespace camo
