#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "diva/error.hpp"

namespace diva {

enum class TokenKind { Identifier, IntLit, RealLit, StrLit, Operator, Punct, Keyword };

const char* to_string(TokenKind kind);

// `lexeme` is the exact source slice. Newlines are emitted as Punct "\n"
// and act as statement separators.
struct Token {
  TokenKind kind;
  std::string lexeme;
  int line = 1;
  int col = 1;

  SourcePos pos() const { return {line, col}; }
  bool is(TokenKind k, std::string_view text) const { return kind == k && lexeme == text; }
};

// Throws Error(Lex) on unterminated strings/comments and illegal characters.
std::vector<Token> tokenize(std::string_view source);

bool is_keyword(std::string_view word);

}  // namespace diva
