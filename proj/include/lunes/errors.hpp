#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lunes {

// Process exit codes shared by the CLI and the in-engine invariant checks.
enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 1,
  kExitUsage = 2,
  kExitInvariant = 3,
};

// Invalid user-supplied parameter (bad bounds, unknown protocol, ...).
class ParameterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text; carries a 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A protocol implementation did something illegal (e.g. send to an invalid
// destination). Aborts the run.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A trace is well-formed but violates cross-event constraints.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An engine self-check failed. Maps to exit code 3.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace lunes
