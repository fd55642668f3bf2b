#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace canyonpl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " at line " + std::to_string(line) : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A domain invariant or operation precondition does not hold.
class InvariantError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// A training step touched a row that belongs to the active fold's test set.
class LeakageError : public Error {
 public:
  using Error::Error;
};

// Bad user-supplied configuration (CLI maps this to exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace canyonpl
