#include "diva/error.hpp"

namespace diva {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Lex: return "LexError";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::UnknownOperator: return "UnknownOperator";
    case ErrorKind::UndefinedName: return "UndefinedName";
    case ErrorKind::DuplicateName: return "DuplicateName";
    case ErrorKind::Cycle: return "CycleError";
    case ErrorKind::Type: return "TypeError";
    case ErrorKind::Arity: return "ArityError";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::DivisionByZero: return "DivisionByZero";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::InvalidSlot: return "InvalidSlot";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::SourceMissing: return "SourceMissing";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Desync: return "DesyncError";
    case ErrorKind::DuplicateOp: return "DuplicateOp";
    case ErrorKind::InconsistentFlags: return "InconsistentFlags";
    case ErrorKind::InvalidValue: return "InvalidValue";
    case ErrorKind::Runtime: return "RuntimeError";
  }
  return "Error";
}

Error::Error(ErrorKind kind, std::string message, SourcePos pos,
             std::vector<std::string> names)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      message_(std::move(message)),
      pos_(pos),
      names_(std::move(names)) {}

std::string Error::diagnostic(std::string_view file) const {
  std::string out(file);
  if (pos_.known()) {
    out += ':' + std::to_string(pos_.line) + ':' + std::to_string(pos_.col);
  }
  out += ": ";
  out += what();
  return out;
}

Error Error::annotated(const std::string& context) const {
  return Error(kind_, context + ": " + message_, pos_, names_);
}

}  // namespace diva
