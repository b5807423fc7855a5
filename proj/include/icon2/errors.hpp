#pragma once

#include <stdexcept>
#include <string>

namespace icon2 {

enum class ErrorCode {
  Parse,
  Io,
  Integrity,
  Usage,
  Format,
  SchemaNotFound,
  Binning,
  UndefinedAp,
  SpreadUndefined,
  ProxyUndefined,
  Spec,
};

/// Library-wide exception; `code()` maps onto CLI exit codes and the
/// structured error object printed on stderr.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  const char* category() const noexcept;

 private:
  ErrorCode code_;
};

/// AP could not be computed for a cell (no positives or an empty curve);
/// carries the positive count so reports can state what was available.
class UndefinedApError : public Error {
 public:
  UndefinedApError(std::string message, long num_positives)
      : Error(ErrorCode::UndefinedAp, std::move(message)),
        num_positives_(num_positives) {}

  long num_positives() const noexcept { return num_positives_; }

 private:
  long num_positives_;
};

}  // namespace icon2
