#pragma once

#include <stdexcept>
#include <string>

namespace nnbdd {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input (model files, diagrams, images, datasets).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Layer shapes that do not chain, or arrays of the wrong length.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Scaled parameters no longer fit the integer range.
class QuantizationError : public Error {
 public:
  using Error::Error;
};

/// The node (or DP cell) budget of a manager was exhausted.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// A precondition on arguments was violated (bad variable, size mismatch, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace nnbdd
