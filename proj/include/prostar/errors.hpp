#pragma once

#include <stdexcept>
#include <string>

namespace prostar {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched algebras, modules, shapes or references.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// An operation was called on inputs that do not satisfy its contract
// (non-Hermitian input to the eigensolver, non-CP map to the dilation, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A numerical routine failed to converge or could not separate a spectrum.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace prostar
