#pragma once

#include <stdexcept>
#include <string>

namespace shieldc {

enum class ErrorKind {
  Syntax,
  DuplicateBinding,
  UnboundVariable,
  UnguardedRecursion,
  UnboundSetName,
  UnknownStateLiteral,
  UnknownObservationLiteral,
  InvalidAgentIndex,
  InvalidEnvironment,
  NonTermination,
  MismatchedShield,
  StateSpaceTooLarge,
  BinaryNotFound,
  Timeout,
  ParseFailure,
  SchemaMismatch,
  InvalidConfig,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(int line, int col, std::string expected, const std::string& found)
      : Error(ErrorKind::Syntax, std::to_string(line) + ":" + std::to_string(col) + ": expected " +
                                     expected + ", found " + found),
        line_(line),
        col_(col),
        expected_(std::move(expected)) {}

  int line() const { return line_; }
  int col() const { return col_; }
  const std::string& expected() const { return expected_; }

 private:
  int line_;
  int col_;
  std::string expected_;
};

/// Raised by the external checker integration; carries the raw tool output.
class ExternalToolError : public Error {
 public:
  ExternalToolError(ErrorKind kind, const std::string& what, std::string raw = {})
      : Error(kind, what), raw_(std::move(raw)) {}
  const std::string& raw_output() const { return raw_; }

 private:
  std::string raw_;
};

}  // namespace shieldc
