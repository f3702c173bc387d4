#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace calfoa {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary input; carries the byte offset where decoding stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class PlacementError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced by a numerical routine.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Singular or numerically unusable linear system.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double condition_estimate);
  double condition_estimate() const noexcept { return condition_; }

 private:
  double condition_;
};

}  // namespace calfoa
