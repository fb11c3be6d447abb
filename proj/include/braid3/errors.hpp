#pragma once

#include <stdexcept>
#include <string>

namespace braid3 {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Triple collision (R = 0) or another configuration with no defined shape.
class DegenerateShapeError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Newtonian potential evaluated at (or numerically at) a two-body collision.
class SingularityError : public Error {
 public:
  SingularityError(int i, int j, const std::string& what)
      : Error(what), first(i), second(j) {}
  int first;
  int second;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOrbitError : public Error {
 public:
  using Error::Error;
};

}  // namespace braid3
