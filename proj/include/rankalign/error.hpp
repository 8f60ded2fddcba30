#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rankalign {

// Base of every error the library throws. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input, schema mismatch or a violated invariant. Exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or a statistic that is undefined for the given data. Exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Failure to open, read or write a file. Exit code 4.
class IoError : public Error {
 public:
  using Error::Error;
};

// Binary archive decoding failure at a known byte offset.
class FormatError : public ValidationError {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : ValidationError(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// Text record failure at a known 1-based line number.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace rankalign
