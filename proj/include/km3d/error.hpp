#pragma once

#include <stdexcept>
#include <string>

namespace km3d {

enum class ErrorCode {
  NonPositiveDepth,
  InvalidCamera,
  InvalidDimension,
  InsufficientConstraints,
  DegenerateSystem,
  BehindCamera,
  ShapeMismatch,
  InvalidScale,
  InvalidAffine,
  MissingKey,
  MalformedNumber,
  FieldCount,
  FrustumExhausted,
  NoConvergence,
  BadFormat,
  Io,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it onto a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure pinned to a 1-based line and column of the input text.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, int line, int column, const std::string& what)
      : Error(code, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace km3d
