#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tcpssm {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: files, shapes, configs. The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

// Numeric failures at runtime. The CLI maps these to exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

class BadMagic : public InputError {
 public:
  using InputError::InputError;
};

class TruncatedPayload : public InputError {
 public:
  using InputError::InputError;
};

class DtypeUnsupported : public InputError {
 public:
  using InputError::InputError;
};

class IoFailure : public InputError {
 public:
  using InputError::InputError;
};

class ShapeMismatch : public InputError {
 public:
  using InputError::InputError;
};

class IndexOutOfRange : public InputError {
 public:
  using InputError::InputError;
};

class EmptyFactorList : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class RootFindingDiverged : public NumericError {
 public:
  using NumericError::NumericError;
};

// Carries the first offending token index so blow-ups are localizable.
class NonFiniteDetected : public NumericError {
 public:
  NonFiniteDetected(std::size_t token_index, const std::string& what)
      : NumericError("non-finite value at token " + std::to_string(token_index) + ": " + what),
        token_index_(token_index) {}
  std::size_t token_index() const { return token_index_; }

 private:
  std::size_t token_index_;
};

class NonFiniteGradient : public NumericError {
 public:
  using NumericError::NumericError;
};

class PoleEvaluation : public NumericError {
 public:
  using NumericError::NumericError;
};

class MismatchBeyondTolerance : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace tcpssm
