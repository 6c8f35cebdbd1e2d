#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace uact {

// Every rejection carries a stable machine-readable code (e.g. "dim-count-mismatch")
// next to the human-readable message. Reports key on the code.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Thrown by file readers and writers; the CLI maps it to exit code 2.
class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io-error", message) {}
};

// NaN or divergence during optimization; the CLI maps it to exit code 3.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& message, long step)
      : Error("numerical-failure", message), step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace uact
