#pragma once

#include <stdexcept>
#include <string>

namespace wld {

// Bad data: shape mismatches, non-finite samples, malformed timelines.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad knobs: out-of-range or inconsistent configuration values.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable or inconsistent on-disk artifacts.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failures distinct from format problems.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Class balancing cannot proceed (a label has no epochs).
class BalanceError : public ValidationError {
 public:
  explicit BalanceError(const std::string& msg) : ValidationError(msg) {}
};

// Numerical blow-up during optimisation (non-finite loss or weights).
class TrainingFault : public std::runtime_error {
 public:
  TrainingFault(const std::string& msg, long step) : std::runtime_error(msg), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// Command-line misuse that is not a data problem.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace wld
