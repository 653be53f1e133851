#pragma once

#include <stdexcept>
#include <string>

namespace sparsenet {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,
  kDataError = 3,
  kRuntimeError = 4,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RewiringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sparsenet
