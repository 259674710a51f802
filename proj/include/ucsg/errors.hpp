#pragma once

#include <stdexcept>
#include <string>

namespace ucsg {

/// Base class for every failure raised by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// The induced chain has two or more closed recurrent classes, so a
/// state-independent average reward does not exist.
struct MultichainError : Error {
  using Error::Error;
};

/// A dense linear system required by an evaluation step is singular.
struct SingularSystem : Error {
  using Error::Error;
};

/// An iterative scheme hit its iteration cap (or diverged) before
/// reaching the requested accuracy.
struct NoConvergence : Error {
  using Error::Error;
};

/// An internal numerical routine failed its own consistency checks
/// (e.g. the simplex did not terminate).  Indicates a bug or a badly
/// conditioned input, never a routine condition.
struct NumericalFailure : Error {
  using Error::Error;
};

/// Malformed text input (model file, config file, generator spec).
struct ParseError : Error {
  using Error::Error;
};

/// A generator spec asks for exact certification beyond the
/// enumeration budget.
struct SpecTooLarge : Error {
  using Error::Error;
};

/// Arguments whose shapes do not agree (policy vs. model, etc.).
struct DimensionMismatch : Error {
  using Error::Error;
};

}  // namespace ucsg
