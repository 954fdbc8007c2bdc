#pragma once

#include <stdexcept>
#include <string>

namespace zenochem {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Physically or structurally invalid input (bad spin, negative rate, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Hilbert or Liouville space would exceed the configured dimension cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Time stepping produced non-finite values or left the regime where the
// jump probabilities are meaningful.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

// Malformed or unreadable configuration file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace zenochem
