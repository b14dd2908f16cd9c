#pragma once

#include <stdexcept>
#include <string>

namespace varbh {

/// Bad user input: malformed config, unknown key, out-of-range parameter.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solver failed to meet its contract (non-convergence, norm drift,
/// singular density, ill-defined Bloch phase).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Output could not be written.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace varbh
