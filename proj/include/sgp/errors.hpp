#pragma once

#include <stdexcept>
#include <string>

namespace sgp {

// Invalid user input: bad parameters, malformed configuration, violated
// preconditions. The CLI maps this family to exit code 2.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A computation that could not be completed: non-converging root search,
// singular systems, runaway jump counts. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ExplosionError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

} // namespace sgp
