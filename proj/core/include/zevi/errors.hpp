#pragma once

#include <stdexcept>
#include <string>

namespace zevi {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input violates an operation precondition (bad shape, empty batch, ...).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// A model is in a state where the requested quantity is undefined
// (mu = 0 latent, singular covariance, zero-variance data).
class DegenerateModelError : public Error {
 public:
  using Error::Error;
};

// An intermediate value overflowed to inf/nan during a transform.
class NumericOverflowError : public Error {
 public:
  using Error::Error;
};

// Optimization produced a non-finite loss or gradient.
class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

// Malformed file content; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, long line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_ = 0;
};

}  // namespace zevi
