// ctxrnnt/error.h
//
// Error types shared by every module. Callers (the CLI in particular) map
// these onto exit codes, so pick the most specific one when throwing.

#ifndef CTXRNNT_ERROR_H_
#define CTXRNNT_ERROR_H_

#include <stdexcept>
#include <string>

namespace ctxrnnt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension or shape disagreement between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed user input: config values, manifests, timestamps, vocab files.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A NaN or Inf showed up where the contract requires finite values.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ctxrnnt

#endif  // CTXRNNT_ERROR_H_
