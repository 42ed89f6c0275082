#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bodypulse {

enum class ErrorKind {
  InvalidArgument,
  InvalidSpec,
  SignalTooShort,
  ZeroVariance,
  Degenerate,
  DataFormat,
  Io,
};

std::string_view to_string(ErrorKind kind);

// All toolkit failures are reported through this type so the CLI can emit a
// structured report carrying the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bodypulse
