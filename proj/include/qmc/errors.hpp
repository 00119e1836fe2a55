#pragma once

#include <stdexcept>
#include <string>

namespace qmc {

// Base class for all library errors. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (e.g. a
// uniform variate on a boundary the transform cannot accept).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Matrix/vector dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A requested configuration is inconsistent or out of range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data violates a contract (non-finite entries, bad posterior rows,
// too few samples).
class DataError : public Error {
 public:
  using Error::Error;
};

// A file is not in the expected on-disk format.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure failed beyond its documented tolerance
// (non-PSD covariance, singular fit, negative trace term).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Requested dimension exceeds the embedded direction-number table.
class UnsupportedDimensionError : public Error {
 public:
  using Error::Error;
};

// A demo construction failed to produce the phenomenon it promises.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

}  // namespace qmc
