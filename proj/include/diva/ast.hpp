#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "diva/error.hpp"
#include "diva/value.hpp"

namespace diva {

// Owning pointer with value semantics (deep copy, pointee comparison), used
// to make the recursive AST an ordinary regular type.
template <class T>
class Box {
 public:
  Box(T value) : p_(std::make_unique<T>(std::move(value))) {}  // NOLINT(implicit)
  Box(const Box& other) : p_(std::make_unique<T>(*other.p_)) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) p_ = std::make_unique<T>(*other.p_);
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  T& operator*() { return *p_; }
  const T& operator*() const { return *p_; }
  T* operator->() { return p_.get(); }
  const T* operator->() const { return p_.get(); }

  friend bool operator==(const Box& a, const Box& b) { return *a.p_ == *b.p_; }

 private:
  std::unique_ptr<T> p_;
};

enum class UnaryOp { Neg, Not };
enum class BinaryOp { Add, Sub, Mul, Div, Mod, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

const char* to_string(UnaryOp op);
const char* to_string(BinaryOp op);

struct AstExpr;

struct Literal {
  Value value;
  friend bool operator==(const Literal& a, const Literal& b) {
    return value_identical(a.value, b.value);
  }
};

struct Ref {
  std::string name;
  friend bool operator==(const Ref&, const Ref&) = default;
};

struct Member {
  Box<AstExpr> base;
  std::string field;
  friend bool operator==(const Member&, const Member&) = default;
};

struct NamedArg {
  std::string name;
  Box<AstExpr> value;
  friend bool operator==(const NamedArg&, const NamedArg&) = default;
};

// `f(...)` and `f{...}` produce the same node.
struct Call {
  std::string callee;
  std::vector<AstExpr> positional;
  std::vector<NamedArg> named;
  friend bool operator==(const Call&, const Call&) = default;
};

struct Unary {
  UnaryOp op;
  Box<AstExpr> operand;
  friend bool operator==(const Unary&, const Unary&) = default;
};

struct Binary {
  BinaryOp op;
  Box<AstExpr> lhs;
  Box<AstExpr> rhs;
  friend bool operator==(const Binary&, const Binary&) = default;
};

struct AstExpr {
  std::variant<Literal, Ref, Member, Call, Unary, Binary> node;
  SourcePos pos;

  // Structural equality ignores positions.
  friend bool operator==(const AstExpr& a, const AstExpr& b) { return a.node == b.node; }
};

struct Assign {
  std::vector<std::string> targets;
  std::vector<AstExpr> exprs;
  std::vector<SourcePos> target_pos;
  friend bool operator==(const Assign& a, const Assign& b) {
    return a.targets == b.targets && a.exprs == b.exprs;
  }
};

struct TriggerBlock {
  AstExpr predicate;
  std::vector<AstExpr> body;  // each a Call
  friend bool operator==(const TriggerBlock&, const TriggerBlock&) = default;
};

struct AstStatement {
  std::variant<Assign, TriggerBlock> stmt;
  SourcePos pos;
  friend bool operator==(const AstStatement& a, const AstStatement& b) {
    return a.stmt == b.stmt;
  }
};

struct WorkflowAst {
  std::vector<AstStatement> statements;
  friend bool operator==(const WorkflowAst&, const WorkflowAst&) = default;
};

// Canonical source text. Binary expressions are fully parenthesized, so the
// output reparses to a structurally identical tree.
std::string pretty_print(const AstExpr& expr);
std::string pretty_print(const WorkflowAst& ast);

}  // namespace diva
