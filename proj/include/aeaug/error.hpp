#pragma once

#include <stdexcept>
#include <string>

namespace aeaug {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated (too few rows, bad fractions, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Input could not be read or parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace aeaug
