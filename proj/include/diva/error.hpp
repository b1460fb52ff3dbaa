#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace diva {

// 1-based source position; line == 0 means "not attached to source text".
struct SourcePos {
  int line = 0;
  int col = 0;

  bool known() const { return line > 0; }
  friend bool operator==(const SourcePos&, const SourcePos&) = default;
};

enum class ErrorKind {
  Lex,
  Parse,
  UnknownOperator,
  UndefinedName,
  DuplicateName,
  Cycle,
  Type,
  Arity,
  TypeMismatch,
  DivisionByZero,
  EmptyInput,
  IndexOutOfRange,
  InvalidSlot,
  Config,
  SourceMissing,
  Io,
  Desync,
  DuplicateOp,
  InconsistentFlags,
  InvalidValue,
  Runtime,
};

const char* to_string(ErrorKind kind);

// Single exception type for the whole library. `kind()` discriminates;
// `names()` carries structured payload (cycle members, offending names).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, SourcePos pos = {},
        std::vector<std::string> names = {});

  ErrorKind kind() const noexcept { return kind_; }
  const SourcePos& pos() const noexcept { return pos_; }
  const std::string& message() const noexcept { return message_; }
  const std::vector<std::string>& names() const noexcept { return names_; }

  // `file:line:col: message`, or `file: message` without a position.
  std::string diagnostic(std::string_view file) const;

  // Copy of this error with `context` prefixed to the message.
  Error annotated(const std::string& context) const;

 private:
  ErrorKind kind_;
  std::string message_;
  SourcePos pos_;
  std::vector<std::string> names_;
};

}  // namespace diva
