#pragma once

#include <stdexcept>
#include <string>

namespace plkan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric argument lies outside the domain of an operation (e.g. non-finite input).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix dimensions do not chain.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value violates a type invariant. The message names the invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Operation only defined for a particular input dimension (1-D complexes, 2-D grids).
class UnsupportedDimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed model or report file.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace plkan
