#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Lexical or syntactic problem in a program, pack, or bias file.
struct ParseError : Error {
  ParseError(const std::string& msg, size_t line, size_t col)
      : Error("parse error at " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
  size_t line;
  size_t col;
};

// The rule dependency graph contains a cycle.
struct RecursionError : Error {
  using Error::Error;
};

struct NonGroundFactError : Error {
  using Error::Error;
};

// A comparison builtin was called on an unbound variable (or a non-integer
// argument for an arithmetic comparison).
struct BuiltinModeError : Error {
  using Error::Error;
};

struct KeyArityMismatch : Error {
  using Error::Error;
};

// Evaluation failed on a specific example; wraps the underlying error.
struct EvalError : Error {
  EvalError(int32_t example_id, const std::string& what)
      : Error("example " + std::to_string(example_id) + ": " + what), example_id(example_id) {}
  int32_t example_id;
};

struct EmptyInput : Error {
  using Error::Error;
};

struct EmptyRefinementSet : Error {
  using Error::Error;
};

struct UndefinedAccuracy : Error {
  using Error::Error;
};

}  // namespace qp
