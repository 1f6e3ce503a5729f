#pragma once

#include <stdexcept>
#include <string>

namespace mixagg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or parameter dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an operation precondition (non-scalar backward root,
/// single-label batch, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameter value (p < 1 for GeM, eps <= 0, ...).
class ParamError : public Error {
 public:
  using Error::Error;
};

/// Input data is inconsistent: duplicate ids, too few places, bad coordinates.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Text input could not be parsed. Carries the 1-based line when known.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : DataError(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// File could not be opened, read, or written, or has a corrupt layout.
class IoError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf appeared where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace mixagg
