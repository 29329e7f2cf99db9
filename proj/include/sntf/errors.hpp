#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sntf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: malformed files, invalid grids, mismatched dimensions.
class InputError : public Error {
 public:
  using Error::Error;
};

class InvalidGridError : public InputError {
 public:
  using InputError::InputError;
};

class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

class CsvError : public InputError {
 public:
  CsvError(const std::string& file, std::size_t line, const std::string& what)
      : InputError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Data that is well-formed but cannot be modelled (all-zero site, one temperature bin).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace sntf
