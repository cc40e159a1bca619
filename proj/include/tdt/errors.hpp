#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tdt {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input vector, tree, or restriction does not fit the ambient dimension.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A parameter lies outside its admissible range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A tree violates structural invariants (repeated variable on a path, bad index).
class MalformedTree : public Error {
 public:
  using Error::Error;
};

/// A serialized document could not be parsed.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// An exact computation would enumerate more free coordinates than allowed.
class EnumerationBudgetExceeded : public Error {
 public:
  EnumerationBudgetExceeded(std::size_t free_coordinates, std::size_t cap)
      : Error("exact enumeration over " + std::to_string(free_coordinates) +
              " free coordinates exceeds cap of " + std::to_string(cap)) {}
};

/// A leaf identifier does not name a leaf of the tree.
class UnknownLeaf : public Error {
 public:
  using Error::Error;
};

}  // namespace tdt
