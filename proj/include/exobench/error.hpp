#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace exobench {

enum class ErrorKind {
  InvalidInput,
  Configuration,
  Validation,
  Singular,
  IncompleteTraining,
  InsufficientData,
  DataQuality,
  Airborne,
  OutOfOrder,
  IncompleteResponse,
  Parse,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` tells callers what went wrong.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace exobench
