// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dnflow {

enum class ErrorKind {
  InvalidArgument,
  ZeroField,
  SingularPoint,
  NonConvergence,
  OutOfRange,
  NotScalar,
  ModelMismatch,
  OutOfDomain,
  ZeroCollapse,
  DegenerateFit,
  BadOrder,
  UnknownDatum,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace dnflow
