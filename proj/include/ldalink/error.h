#pragma once

#include <stdexcept>
#include <string>

namespace ldalink {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user-supplied data: malformed files, out-of-range values, inconsistent
// inputs. The CLI maps these to exit code 1.
class InputError : public Error {
 public:
  using Error::Error;
};

// A malformed line in a text input. Carries the 1-based line number and the
// name of the offending field.
class ParseError : public InputError {
 public:
  ParseError(long line, std::string field, const std::string& detail)
      : InputError("line " + std::to_string(line) + ", field " + field + ": " +
                   detail),
        line_(line),
        field_(std::move(field)) {}

  long line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  long line_;
  std::string field_;
};

}  // namespace ldalink
