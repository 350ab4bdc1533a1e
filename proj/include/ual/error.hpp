#ifndef UAL_ERROR_HPP
#define UAL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ual {

/// Precondition or argument violation.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Factorization failed even after bounded jitter escalation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files (CSV, schema, config).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ual

#endif  // UAL_ERROR_HPP
