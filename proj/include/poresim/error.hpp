#pragma once

#include <stdexcept>
#include <string>

namespace poresim {

// Root of every error the library throws. Subclasses name the failure kind
// so callers (and the CLI) can map them without parsing messages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class Unsatisfiable : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace poresim
