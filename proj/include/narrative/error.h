#ifndef NARRATIVE_ERROR_H_
#define NARRATIVE_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace narrative {

// Base class for all toolkit errors. The CLI maps ConfigError to exit code 2
// and every other Error to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid numeric or structural parameter (slice_size < 1, eps ordering...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string &what, size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

class OverlapError : public Error {
 public:
  using Error::Error;
};

// Non-finite value produced during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Token or character not present where it was expected.
class LookupError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Invalid or unknown configuration. Exit code 2 in the CLI.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace narrative

#endif  // NARRATIVE_ERROR_H_
