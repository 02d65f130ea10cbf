#pragma once

#include <stdexcept>
#include <string>

namespace llcp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value lies outside an atom's domain, or a constant is not positive.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Arity, shape or parameter contract of an atom is violated.
class SignatureError : public Error {
 public:
  using Error::Error;
};

/// Unknown atom or missing variable.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Invalid construction of a variable, constraint or problem.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

}  // namespace llcp
