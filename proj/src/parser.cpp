#include "diva/parser.hpp"

#include <charconv>
#include <cstdlib>
#include <optional>
#include <set>

namespace diva {

const char* to_string(UnaryOp op) { return op == UnaryOp::Neg ? "-" : "!"; }

const char* to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Mod: return "%";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::And: return "&&";
    case BinaryOp::Or: return "||";
  }
  return "?";
}

std::string unescape_string(std::string_view lexeme) {
  std::string out;
  for (std::size_t i = 1; i + 1 < lexeme.size(); ++i) {
    char c = lexeme[i];
    if (c == '\\' && i + 2 < lexeme.size()) {
      c = lexeme[++i];
      switch (c) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: out += c; break;
      }
      continue;
    }
    out += c;
  }
  return out;
}

std::string escape_string(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + '"';
}

namespace {

class Parser {
 public:
  Parser(const std::vector<Token>& toks, const ReservedPredicate& is_operator)
      : toks_(toks), is_operator_(is_operator) {}

  WorkflowAst workflow() {
    WorkflowAst ast;
    skip_separators();
    while (!at_end()) {
      ast.statements.push_back(statement());
      if (!at_end() && !is_separator(peek())) {
        fail_expected("newline or ';' after statement");
      }
      skip_separators();
    }
    return ast;
  }

 private:
  // --- token access -------------------------------------------------------

  bool at_end() {
    skip_insensitive_newlines();
    return pos_ >= toks_.size();
  }

  const Token& peek() {
    skip_insensitive_newlines();
    if (pos_ >= toks_.size()) return eof_token();
    return toks_[pos_];
  }

  const Token& peek_at(std::size_t ahead) {
    skip_insensitive_newlines();
    std::size_t p = pos_;
    for (std::size_t k = 0; k < ahead && p < toks_.size(); ++k) {
      ++p;
      while (nl_insensitive_ > 0 && p < toks_.size() && toks_[p].is(TokenKind::Punct, "\n")) ++p;
    }
    return p < toks_.size() ? toks_[p] : eof_token();
  }

  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size()) ++pos_;
    return t;
  }

  const Token& eof_token() {
    if (!eof_) {
      SourcePos end{1, 1};
      if (!toks_.empty()) {
        const Token& last = toks_.back();
        end = last.lexeme == "\n" ? SourcePos{last.line + 1, 1}
                                  : SourcePos{last.line, last.col + static_cast<int>(last.lexeme.size())};
      }
      eof_ = Token{TokenKind::Punct, "", end.line, end.col};
    }
    return *eof_;
  }

  void skip_insensitive_newlines() {
    if (nl_insensitive_ == 0) return;
    while (pos_ < toks_.size() && toks_[pos_].is(TokenKind::Punct, "\n")) ++pos_;
  }

  static bool is_separator(const Token& t) {
    return t.is(TokenKind::Punct, "\n") || t.is(TokenKind::Punct, ";");
  }

  void skip_separators() {
    while (pos_ < toks_.size() && is_separator(toks_[pos_])) ++pos_;
  }

  bool accept(TokenKind kind, std::string_view text) {
    if (peek().is(kind, text)) {
      next();
      return true;
    }
    return false;
  }

  const Token& expect(TokenKind kind, std::string_view text) {
    if (!peek().is(kind, text)) fail_expected("'" + std::string(text) + "'");
    return next();
  }

  [[noreturn]] void fail_expected(const std::string& what) {
    const Token& t = peek();
    std::string got = t.lexeme.empty() ? "end of input"
                      : t.lexeme == "\n" ? "newline"
                                         : "'" + t.lexeme + "'";
    throw Error(ErrorKind::Parse, "expected " + what + ", got " + got, t.pos());
  }

  // RAII toggles for newline sensitivity (inside parens newlines are ignored,
  // inside trigger bodies they separate calls).
  struct NewlineScope {
    Parser& p;
    int saved;
    NewlineScope(Parser& parser, bool insensitive) : p(parser), saved(parser.nl_insensitive_) {
      p.nl_insensitive_ = insensitive ? saved + 1 : 0;
    }
    ~NewlineScope() { p.nl_insensitive_ = saved; }
  };

  // --- statements ---------------------------------------------------------

  AstStatement statement() {
    const Token& first = peek();
    if (first.is(TokenKind::Keyword, "Trigger")) return trigger();
    if (first.kind != TokenKind::Identifier) fail_expected("assignment or Trigger block");
    return assignment();
  }

  AstStatement assignment() {
    AstStatement st;
    st.pos = peek().pos();
    Assign a;
    do {
      const Token& name = peek();
      if (name.kind != TokenKind::Identifier) fail_expected("variable name");
      check_target(name);
      a.targets.push_back(name.lexeme);
      a.target_pos.push_back(name.pos());
      next();
    } while (accept(TokenKind::Punct, ","));
    expect(TokenKind::Operator, "=");
    do {
      a.exprs.push_back(expr());
    } while (accept(TokenKind::Punct, ","));
    if (a.exprs.size() != a.targets.size()) {
      throw Error(ErrorKind::Parse,
                  "assignment has " + std::to_string(a.targets.size()) + " targets but " +
                      std::to_string(a.exprs.size()) + " expressions",
                  st.pos);
    }
    st.stmt = std::move(a);
    return st;
  }

  void check_target(const Token& name) {
    const std::string& n = name.lexeme;
    if (n == "time" || n == "data" || (is_operator_ && is_operator_(n))) {
      throw Error(ErrorKind::Parse, "'" + n + "' is a reserved name", name.pos());
    }
    if (!assigned_.insert(n).second) {
      throw Error(ErrorKind::Parse, "variable '" + n + "' is already defined (no rebinding)",
                  name.pos());
    }
  }

  AstStatement trigger() {
    AstStatement st;
    st.pos = next().pos();  // 'Trigger'
    expect(TokenKind::Punct, "(");
    TriggerBlock tb{[&] {
      NewlineScope scope(*this, true);
      return expr();
    }(), {}};
    expect(TokenKind::Punct, ")");
    {
      NewlineScope scope(*this, false);
      const Token& open = expect(TokenKind::Punct, "{");
      skip_separators();
      while (!peek().is(TokenKind::Punct, "}")) {
        if (peek().lexeme.empty()) fail_expected("'}' closing Trigger body");
        const Token& head = peek();
        if (head.kind != TokenKind::Identifier ||
            !(peek_at(1).is(TokenKind::Punct, "(") || peek_at(1).is(TokenKind::Punct, "{"))) {
          fail_expected("action call in Trigger body");
        }
        tb.body.push_back(expr());
        if (!peek().is(TokenKind::Punct, "}") && !is_separator(peek())) {
          fail_expected("newline, ';' or '}' after action call");
        }
        skip_separators();
      }
      if (tb.body.empty()) {
        throw Error(ErrorKind::Parse, "Trigger body must contain at least one action call",
                    open.pos());
      }
      next();  // '}'
    }
    st.stmt = std::move(tb);
    return st;
  }

  // --- expressions --------------------------------------------------------

  AstExpr expr() { return or_expr(); }

  static AstExpr make_binary(BinaryOp op, AstExpr lhs, AstExpr rhs, SourcePos pos) {
    return AstExpr{Binary{op, std::move(lhs), std::move(rhs)}, pos};
  }

  AstExpr or_expr() {
    AstExpr lhs = and_expr();
    while (peek().is(TokenKind::Operator, "||") || peek().is(TokenKind::Keyword, "or")) {
      const SourcePos pos = next().pos();
      lhs = make_binary(BinaryOp::Or, std::move(lhs), and_expr(), pos);
    }
    return lhs;
  }

  AstExpr and_expr() {
    AstExpr lhs = cmp_expr();
    while (peek().is(TokenKind::Operator, "&&") || peek().is(TokenKind::Keyword, "and")) {
      const SourcePos pos = next().pos();
      lhs = make_binary(BinaryOp::And, std::move(lhs), cmp_expr(), pos);
    }
    return lhs;
  }

  AstExpr cmp_expr() {
    AstExpr lhs = add_expr();
    while (true) {
      const Token& t = peek();
      if (t.kind != TokenKind::Operator) break;
      BinaryOp op;
      if (t.lexeme == "<") op = BinaryOp::Lt;
      else if (t.lexeme == "<=") op = BinaryOp::Le;
      else if (t.lexeme == ">") op = BinaryOp::Gt;
      else if (t.lexeme == ">=") op = BinaryOp::Ge;
      else if (t.lexeme == "==") op = BinaryOp::Eq;
      else if (t.lexeme == "!=") op = BinaryOp::Ne;
      else break;
      const SourcePos pos = next().pos();
      lhs = make_binary(op, std::move(lhs), add_expr(), pos);
    }
    return lhs;
  }

  AstExpr add_expr() {
    AstExpr lhs = mul_expr();
    while (peek().is(TokenKind::Operator, "+") || peek().is(TokenKind::Operator, "-")) {
      const Token& t = next();
      const BinaryOp op = t.lexeme == "+" ? BinaryOp::Add : BinaryOp::Sub;
      lhs = make_binary(op, std::move(lhs), mul_expr(), t.pos());
    }
    return lhs;
  }

  AstExpr mul_expr() {
    AstExpr lhs = unary_expr();
    while (true) {
      const Token& t = peek();
      BinaryOp op;
      if (t.is(TokenKind::Operator, "*")) op = BinaryOp::Mul;
      else if (t.is(TokenKind::Operator, "/")) op = BinaryOp::Div;
      else if (t.is(TokenKind::Operator, "%")) op = BinaryOp::Mod;
      else break;
      const SourcePos pos = next().pos();
      lhs = make_binary(op, std::move(lhs), unary_expr(), pos);
    }
    return lhs;
  }

  AstExpr unary_expr() {
    const Token& t = peek();
    if (t.is(TokenKind::Operator, "-")) {
      const SourcePos pos = next().pos();
      return AstExpr{Unary{UnaryOp::Neg, unary_expr()}, pos};
    }
    if (t.is(TokenKind::Operator, "!") || t.is(TokenKind::Keyword, "not")) {
      const SourcePos pos = next().pos();
      return AstExpr{Unary{UnaryOp::Not, unary_expr()}, pos};
    }
    return postfix_expr();
  }

  AstExpr postfix_expr() {
    AstExpr base = primary();
    while (peek().is(TokenKind::Punct, ".")) {
      const SourcePos pos = next().pos();
      const Token& field = peek();
      if (field.kind != TokenKind::Identifier) fail_expected("member name after '.'");
      next();
      base = AstExpr{Member{std::move(base), field.lexeme}, pos};
    }
    return base;
  }

  AstExpr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::IntLit: {
        next();
        std::int64_t v = 0;
        auto res = std::from_chars(t.lexeme.data(), t.lexeme.data() + t.lexeme.size(), v);
        if (res.ec != std::errc()) {
          throw Error(ErrorKind::Parse, "integer literal out of range", t.pos());
        }
        return AstExpr{Literal{Value::integer(v)}, t.pos()};
      }
      case TokenKind::RealLit: {
        next();
        return AstExpr{Literal{Value::real(std::strtod(t.lexeme.c_str(), nullptr))}, t.pos()};
      }
      case TokenKind::StrLit:
        next();
        return AstExpr{Literal{Value::string(unescape_string(t.lexeme))}, t.pos()};
      case TokenKind::Keyword:
        if (t.lexeme == "true" || t.lexeme == "false") {
          next();
          return AstExpr{Literal{Value::boolean(t.lexeme == "true")}, t.pos()};
        }
        break;
      case TokenKind::Identifier: {
        next();
        if (peek().is(TokenKind::Punct, "(")) return call(t, "(", ")");
        if (peek().is(TokenKind::Punct, "{")) return call(t, "{", "}");
        return AstExpr{Ref{t.lexeme}, t.pos()};
      }
      case TokenKind::Punct:
        if (t.lexeme == "(") {
          next();
          NewlineScope scope(*this, true);
          AstExpr inner = expr();
          expect(TokenKind::Punct, ")");
          return inner;
        }
        break;
      default: break;
    }
    fail_expected("expression");
  }

  AstExpr call(const Token& callee, std::string_view open, std::string_view close) {
    NewlineScope scope(*this, true);
    expect(TokenKind::Punct, open);
    Call c;
    c.callee = callee.lexeme;
    if (!peek().is(TokenKind::Punct, close)) {
      do {
        const Token& t = peek();
        if (t.kind == TokenKind::Identifier && peek_at(1).is(TokenKind::Operator, "=")) {
          next();
          next();
          for (const auto& n : c.named) {
            if (n.name == t.lexeme) {
              throw Error(ErrorKind::Parse, "duplicate named argument '" + t.lexeme + "'",
                          t.pos());
            }
          }
          c.named.push_back(NamedArg{t.lexeme, expr()});
        } else {
          if (!c.named.empty()) {
            throw Error(ErrorKind::Parse, "positional argument after named argument", t.pos());
          }
          c.positional.push_back(expr());
        }
      } while (accept(TokenKind::Punct, ","));
    }
    expect(TokenKind::Punct, close);
    return AstExpr{std::move(c), callee.pos()};
  }

  const std::vector<Token>& toks_;
  const ReservedPredicate& is_operator_;
  std::size_t pos_ = 0;
  int nl_insensitive_ = 0;
  std::optional<Token> eof_;
  std::set<std::string> assigned_;
};

// --- pretty printer ---------------------------------------------------------

void print_expr(const AstExpr& e, std::string& out);

void print_literal(const Value& v, std::string& out) {
  switch (v.type()) {
    case Type::Bool: out += v.as_bool() ? "true" : "false"; break;
    case Type::Int: out += std::to_string(v.as_int()); break;
    case Type::Real: out += format_real(v.as_real()); break;
    case Type::Str: out += escape_string(v.as_str()); break;
    default: out += to_display(v); break;
  }
}

void print_expr(const AstExpr& e, std::string& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Literal>) {
          print_literal(n.value, out);
        } else if constexpr (std::is_same_v<T, Ref>) {
          out += n.name;
        } else if constexpr (std::is_same_v<T, Member>) {
          print_expr(*n.base, out);
          out += '.';
          out += n.field;
        } else if constexpr (std::is_same_v<T, Call>) {
          out += n.callee;
          out += '(';
          bool first = true;
          for (const auto& a : n.positional) {
            if (!first) out += ", ";
            first = false;
            print_expr(a, out);
          }
          for (const auto& a : n.named) {
            if (!first) out += ", ";
            first = false;
            out += a.name;
            out += " = ";
            print_expr(*a.value, out);
          }
          out += ')';
        } else if constexpr (std::is_same_v<T, Unary>) {
          out += to_string(n.op);
          out += '(';
          print_expr(*n.operand, out);
          out += ')';
        } else if constexpr (std::is_same_v<T, Binary>) {
          out += '(';
          print_expr(*n.lhs, out);
          out += ' ';
          out += to_string(n.op);
          out += ' ';
          print_expr(*n.rhs, out);
          out += ')';
        }
      },
      e.node);
}

}  // namespace

WorkflowAst parse_workflow(const std::vector<Token>& tokens, const ReservedPredicate& is_operator) {
  return Parser(tokens, is_operator).workflow();
}

WorkflowAst parse_source(std::string_view source, const ReservedPredicate& is_operator) {
  return parse_workflow(tokenize(source), is_operator);
}

std::string pretty_print(const AstExpr& expr) {
  std::string out;
  print_expr(expr, out);
  return out;
}

std::string pretty_print(const WorkflowAst& ast) {
  std::string out;
  for (const auto& st : ast.statements) {
    if (const auto* a = std::get_if<Assign>(&st.stmt)) {
      for (std::size_t i = 0; i < a->targets.size(); ++i) {
        if (i) out += ", ";
        out += a->targets[i];
      }
      out += " = ";
      for (std::size_t i = 0; i < a->exprs.size(); ++i) {
        if (i) out += ", ";
        print_expr(a->exprs[i], out);
      }
    } else {
      const auto& t = std::get<TriggerBlock>(st.stmt);
      out += "Trigger(";
      print_expr(t.predicate, out);
      out += ") {\n";
      for (const auto& c : t.body) {
        out += "  ";
        print_expr(c, out);
        out += '\n';
      }
      out += '}';
    }
    out += '\n';
  }
  return out;
}

}  // namespace diva
