#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace soilwave {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition or invalid argument value.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Input data that parses but breaks a domain invariant (range, shape, non-finite).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what, std::size_t line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

/// Structurally malformed text input; carries the 1-based source line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Malformed single-object payload (JSON uplink line, model document).
class DecodeError : public Error {
 public:
  using Error::Error;
};

/// Unknown or incompatible container/file format version.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem-level failure (open, read, write).
class StorageError : public Error {
 public:
  using Error::Error;
};

/// Input that is syntactically fine but mathematically unusable
/// (zero variance column, zero average current).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Gateway streams share no usable overlap.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Optimization failure; carries the 1-based epoch where it occurred.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::size_t epoch)
      : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace soilwave
