#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wavehdnn {

/// A caller broke an operation's precondition (shape mismatch, bad id, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid user-supplied configuration value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values or solver failure.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input content. `line` is 1-based, 0 when not line-specific.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Artifacts that do not fit together (checkpoint vs. dataset shapes).
class CompatibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define WAVEHDNN_REQUIRE(cond, msg)                  \
  do {                                               \
    if (!(cond)) throw ::wavehdnn::ContractViolation(msg); \
  } while (0)

}  // namespace wavehdnn
