#pragma once

#include <stdexcept>
#include <string>

namespace qwalk {

// Malformed structures, unknown vertex ids, invalid paths.
class DomainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Out-of-range algorithm parameters.
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Solver failures, singular systems, lost precision.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// File and serialization problems.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace qwalk
