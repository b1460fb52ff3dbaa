#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "diva/builtins.hpp"
#include "diva/lexer.hpp"
#include "diva/parser.hpp"
#include "support/random_workflow.hpp"

using namespace diva;

namespace {

// Reference precedence climbing over a flat operand/operator sequence,
// rendering the fully parenthesized form.
struct Climber {
  std::vector<std::string> toks;
  std::size_t i = 0;

  static int prec(const std::string& op) {
    if (op == "||") return 1;
    if (op == "&&") return 2;
    if (op == "<" || op == "<=" || op == ">" || op == ">=" || op == "==" || op == "!=") return 3;
    if (op == "+" || op == "-") return 4;
    if (op == "*" || op == "/" || op == "%") return 5;
    return 0;
  }

  std::string primary() {
    const std::string t = toks[i++];
    if (t == "-" || t == "!") return t + "(" + primary() + ")";
    return t;
  }

  std::string climb(int min_prec) {
    std::string lhs = primary();
    while (i < toks.size() && prec(toks[i]) >= min_prec) {
      const std::string op = toks[i++];
      std::string rhs = climb(prec(op) + 1);
      lhs = "(" + lhs + " " + op + " " + rhs + ")";
    }
    return lhs;
  }
};

std::string parse_expr_text(const std::string& text) {
  const auto ast = parse_source("x = " + text + "\n");
  return pretty_print(std::get<Assign>(ast.statements.at(0).stmt).exprs.at(0));
}

}  // namespace

TEST(Lexer, TokensAndPositions) {
  const auto toks = tokenize("a = f{1, 2.5e3}\n  // note\nTrigger(b) { print(\"s\\n\") }");
  ASSERT_GE(toks.size(), 10u);
  EXPECT_EQ(toks[0].kind, TokenKind::Identifier);
  EXPECT_EQ(toks[4].kind, TokenKind::IntLit);
  EXPECT_EQ(toks[6].kind, TokenKind::RealLit);
  const auto trig = std::find_if(toks.begin(), toks.end(), [](const Token& t) { return t.lexeme == "Trigger"; });
  ASSERT_NE(trig, toks.end());
  EXPECT_EQ(trig->kind, TokenKind::Keyword);
  EXPECT_EQ(trig->line, 3);
  EXPECT_EQ(trig->col, 1);
}

TEST(Lexer, Errors) {
  for (const char* bad : {"x = \"open", "x = 1 /* never closed", "x = 1 $ 2"}) {
    try {
      tokenize(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Lex);
      EXPECT_TRUE(e.pos().known());
    }
  }
  try {
    tokenize("a = 1\nb = 2 @");
  } catch (const Error& e) {
    EXPECT_EQ(e.pos(), (SourcePos{2, 7}));
  }
}

TEST(Parser, PrecedenceMatchesReferenceClimber) {
  const std::vector<std::string> ops = {"||", "&&", "<", "<=", ">", ">=", "==", "!=",
                                        "+",  "-",  "*", "/",  "%"};
  std::mt19937_64 g(11);
  for (int k = 0; k < 3000; ++k) {
    Climber c;
    const int operands = 1 + static_cast<int>(g() % 7);
    for (int j = 0; j < operands; ++j) {
      if (j) c.toks.push_back(ops[g() % ops.size()]);
      if (g() % 5 == 0) c.toks.push_back(g() % 2 ? "-" : "!");
      c.toks.push_back(std::string(1, static_cast<char>('a' + g() % 5)));
    }
    std::string text;
    for (const auto& t : c.toks) text += t + " ";
    EXPECT_EQ(parse_expr_text(text), c.climb(1)) << text;
  }
}

TEST(Parser, BraceAndParenCallsAreEquivalent) {
  EXPECT_EQ(parse_source("x = f()\n"), parse_source("x = f{}\n"));
  EXPECT_EQ(parse_source("x = f(a, g(b), k = 1)\n"), parse_source("x = f{a, g{b}, k = 1}\n"));
  EXPECT_NE(parse_source("x = f(a)\n"), parse_source("x = f(b)\n"));
}

TEST(Parser, TupleAssignmentAndTriggers) {
  const auto ast = parse_source("a, b = 1, time > 3\nTrigger(b) {\n  print(a)\n  print(b)\n}\n");
  ASSERT_EQ(ast.statements.size(), 2u);
  const auto& as = std::get<Assign>(ast.statements[0].stmt);
  EXPECT_EQ(as.targets, (std::vector<std::string>{"a", "b"}));
  const auto& tb = std::get<TriggerBlock>(ast.statements[1].stmt);
  EXPECT_EQ(tb.body.size(), 2u);
}

TEST(Parser, PrettyPrintRoundTripsRandomWorkflows) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    randwf::Generator gen(seed);
    const auto ast = parse_source(gen.workflow(2 + static_cast<int>(seed % 8)));
    EXPECT_EQ(parse_source(pretty_print(ast)), ast) << pretty_print(ast);
  }
  const auto cs = parse_source(
      "s = \"a\\\"b\" + str(1.5E-3)\nTrigger(!(time % 2 == 0)) { save_csv(s, path = \"x.csv\") }\n");
  EXPECT_EQ(parse_source(pretty_print(cs)), cs);
}

TEST(Parser, Errors) {
  struct Case {
    const char* src;
    SourcePos pos;
  };
  const OpRegistry reg = make_builtin_registry();
  const auto is_op = [&](std::string_view n) { return reg.contains(n); };
  const std::vector<Case> cases = {
      {"x = (1 + 2\n", {2, 1}},
      {"x = 1\nx = 2\n", {2, 1}},
      {"time = 3\n", {1, 1}},
      {"count = 3\n", {1, 1}},
      {"a, b = 1\n", {1, 1}},
      {"Trigger(true) {\n}\n", {1, 15}},
      {"x = f(a = 1, 2)\n", {1, 14}},
      {"x = f(a = 1, a = 2)\n", {1, 14}},
      {"x = 99999999999999999999\n", {1, 5}},
  };
  for (const auto& c : cases) {
    try {
      parse_source(c.src, is_op);
      ADD_FAILURE() << "accepted: " << c.src;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Parse) << c.src;
      EXPECT_EQ(e.pos(), c.pos) << c.src << " -> " << e.what();
    }
  }
}

TEST(Parser, StringEscapes) {
  EXPECT_EQ(unescape_string("\"a\\tb\\\\\""), "a\tb\\");
  for (const std::string s : {"", "plain", "q\"uote", "tab\tnl\nbs\\"}) {
    EXPECT_EQ(unescape_string(escape_string(s)), s);
  }
}
