#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace annulus {

/// Failure categories raised by the numerical routines. The CLI maps these
/// onto process exit codes.
enum class ErrorKind {
  domain,
  convergence,
  normalization,
  resolution,
  fit,
  spectrum,
  singularity,
  positivity,
  truncation,
  support,
  conditioning,
  construction,
  dimension,
  factorization,
  parse,
  validation,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace annulus
