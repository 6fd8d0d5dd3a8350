#pragma once

#include <stdexcept>
#include <string>

namespace fairgate {

// Root of every error the library raises. Subclasses map onto CLI exit codes
// and HTTP status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data: corpus lines, config files, model files.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A caller-supplied value violates a precondition (empty text, bad ratio...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

// The request conflicts with stored state (e.g. a second final submission).
class ConflictError : public Error {
 public:
  using Error::Error;
};

// Parameter arrays whose shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairgate
