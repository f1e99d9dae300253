#pragma once

#include <stdexcept>
#include <string>

namespace precocity {

// Base for every error the engine raises. The CLI maps the three
// subclasses onto exit codes 1, 2 and 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// A computation could not be carried out (degenerate design, empty model).
class ComputeError : public Error {
 public:
  using Error::Error;
};

}  // namespace precocity
