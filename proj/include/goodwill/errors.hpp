#pragma once

#include <stdexcept>
#include <string>

namespace goodwill {

// Profiles or grids of incompatible size.
class dimension_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An argument outside the mathematical domain of an operation (e.g. a lag
// outside [-r, 0], or a time outside [0, T]).
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid parameters, inconsistent step sizes, malformed config files.
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite or exploding state during time stepping.
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace goodwill
