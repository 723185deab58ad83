#pragma once

#include <stdexcept>
#include <string>

namespace lagrelax {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// A symmetric factorization failed where positive definiteness was required.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class NotPairwiseNormalizable : public Error {
 public:
  using Error::Error;
};

/// A decomposition strategy could not place some hyperedge in any component.
class UncoveredEdge : public Error {
 public:
  using Error::Error;
};

/// An exact oracle was asked for a problem above its size cap.
class TooLarge : public Error {
 public:
  using Error::Error;
};

}  // namespace lagrelax
