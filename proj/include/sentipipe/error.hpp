#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace sentipipe {

/// Failure category. Each maps to a distinct CLI exit code.
enum class ErrorKind {
  Config,      // bad configuration or invalid arguments (exit 2)
  DataFormat,  // malformed input files (exit 3)
  Numerical,   // divergence, non-finite values (exit 4)
  Transport,   // sidecar unreachable or non-200 (exit 5)
};

int exit_code(ErrorKind kind) noexcept;
const char* kind_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

/// Malformed file or document. `offset` is a byte offset (or row number for
/// tabular inputs, as stated in the message).
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(ErrorKind::DataFormat, what + " (at offset " + std::to_string(offset) + ")"),
        detail_(what),
        offset_(offset) {}
  explicit FormatError(const std::string& what)
      : Error(ErrorKind::DataFormat, what), detail_(what) {}

  /// Message without the offset suffix.
  const std::string& detail() const noexcept { return detail_; }
  std::optional<std::size_t> offset() const noexcept { return offset_; }

  /// Same error with `prefix` (typically a file path) prepended.
  FormatError with_context(const std::string& prefix) const {
    return offset_ ? FormatError(prefix + ": " + detail_, *offset_)
                   : FormatError(prefix + ": " + detail_);
  }

 private:
  std::string detail_;
  std::optional<std::size_t> offset_;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(ErrorKind::Transport,
              what + " (after " + std::to_string(attempts) + " attempt" +
                  (attempts == 1 ? "" : "s") + ")"),
        attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }
  bool retryable() const noexcept { return true; }

 private:
  int attempts_;
};

}  // namespace sentipipe
