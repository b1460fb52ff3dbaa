#include "diva/lexer.hpp"

#include <array>
#include <cctype>
#include <cstdio>

namespace diva {

const char* to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Identifier: return "identifier";
    case TokenKind::IntLit: return "int-lit";
    case TokenKind::RealLit: return "real-lit";
    case TokenKind::StrLit: return "str-lit";
    case TokenKind::Operator: return "operator";
    case TokenKind::Punct: return "punct";
    case TokenKind::Keyword: return "keyword";
  }
  return "?";
}

bool is_keyword(std::string_view word) {
  static constexpr std::array<std::string_view, 6> kKeywords = {
      "Trigger", "and", "or", "not", "true", "false"};
  for (auto k : kKeywords) {
    if (k == word) return true;
  }
  return false;
}

namespace {

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    while (!done()) {
      const char c = peek();
      if (c == '\n') {
        emit(TokenKind::Punct, 1);
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r') {
        advance(1);
        continue;
      }
      if (c == '/' && peek(1) == '/') {
        while (!done() && peek() != '\n') advance(1);
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        block_comment();
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        word();
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        number();
        continue;
      }
      if (c == '"') {
        string();
        continue;
      }
      if (op_or_punct()) continue;
      fail(std::string("illegal character '") + printable(c) + "'");
    }
    return std::move(out_);
  }

 private:
  bool done() const { return i_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return i_ + ahead < src_.size() ? src_[i_ + ahead] : '\0';
  }

  void advance(std::size_t n) {
    for (std::size_t k = 0; k < n && i_ < src_.size(); ++k, ++i_) {
      if (src_[i_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
    }
  }

  void emit(TokenKind kind, std::size_t len) {
    out_.push_back(Token{kind, std::string(src_.substr(i_, len)), line_, col_});
    advance(len);
  }

  [[noreturn]] void fail(const std::string& msg) const { fail_at(msg, line_, col_); }
  [[noreturn]] static void fail_at(const std::string& msg, int line, int col) {
    throw Error(ErrorKind::Lex, msg, SourcePos{line, col});
  }

  static std::string printable(char c) {
    if (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) >= 0x7f) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "\\x%02x", static_cast<unsigned char>(c));
      return buf;
    }
    return std::string(1, c);
  }

  void block_comment() {
    const int line = line_;
    const int col = col_;
    advance(2);
    while (!done()) {
      if (peek() == '*' && peek(1) == '/') {
        advance(2);
        return;
      }
      advance(1);
    }
    fail_at("unterminated comment", line, col);
  }

  void word() {
    std::size_t n = 0;
    while (std::isalnum(static_cast<unsigned char>(peek(n))) || peek(n) == '_') ++n;
    const auto text = src_.substr(i_, n);
    emit(is_keyword(text) ? TokenKind::Keyword : TokenKind::Identifier, n);
  }

  void number() {
    std::size_t n = 0;
    auto digits = [&] {
      while (std::isdigit(static_cast<unsigned char>(peek(n)))) ++n;
    };
    digits();
    bool real = false;
    if (peek(n) == '.' && std::isdigit(static_cast<unsigned char>(peek(n + 1)))) {
      real = true;
      ++n;
      digits();
    }
    if (peek(n) == 'e' || peek(n) == 'E') {
      std::size_t m = n + 1;
      if (peek(m) == '+' || peek(m) == '-') ++m;
      if (std::isdigit(static_cast<unsigned char>(peek(m)))) {
        real = true;
        n = m;
        digits();
      }
    }
    if (std::isalpha(static_cast<unsigned char>(peek(n))) || peek(n) == '_') {
      fail("malformed number literal");
    }
    emit(real ? TokenKind::RealLit : TokenKind::IntLit, n);
  }

  void string() {
    const int line = line_;
    const int col = col_;
    std::size_t n = 1;
    while (true) {
      const char c = peek(n);
      if (i_ + n >= src_.size() || c == '\n') fail_at("unterminated string", line, col);
      if (c == '\\') {
        n += 2;
        continue;
      }
      ++n;
      if (c == '"') break;
    }
    emit(TokenKind::StrLit, n);
  }

  bool op_or_punct() {
    static constexpr std::array<std::string_view, 8> kTwo = {"==", "!=", "<=", ">=",
                                                             "&&", "||"};
    for (auto op : kTwo) {
      if (!op.empty() && src_.substr(i_, 2) == op) {
        emit(TokenKind::Operator, 2);
        return true;
      }
    }
    const char c = peek();
    if (std::string_view("=<>+-*/%!").find(c) != std::string_view::npos) {
      emit(TokenKind::Operator, 1);
      return true;
    }
    if (std::string_view("(){},.;").find(c) != std::string_view::npos) {
      emit(TokenKind::Punct, 1);
      return true;
    }
    return false;
  }

  std::string_view src_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
  std::vector<Token> out_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace diva
