#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fluid {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric argument is outside its documented domain.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// A source block is empty or its symbols are malformed.
class InvalidBlock : public Error {
 public:
  using Error::Error;
};

/// Encoded symbol does not fit the decoder it is fed to.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A computed quantity failed an internal consistency check (e.g. a probability
/// distribution that does not sum to one).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Scenario text could not be parsed. `line()` is 1-based, 0 when not tied to a line.
class ScenarioError : public Error {
 public:
  ScenarioError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace fluid
