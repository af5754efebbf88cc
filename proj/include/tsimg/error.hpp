#pragma once

#include <stdexcept>
#include <string>

namespace tsimg {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value is outside its documented domain.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller-supplied data violates an operation's precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

/// An image does not satisfy the one-hot column structure.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Evaluation could not produce a single scored window.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Broken internal invariant; indicates a bug.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tsimg
