#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diva/ast.hpp"
#include "diva/registry.hpp"

namespace diva {

using NodeId = std::size_t;

struct DagNode {
  NodeId id = 0;
  std::string name;  // user name, or `base#k` for inline sub-expressions
  NodeKind kind = NodeKind::PureFn;
  std::string op;
  ConstArgs const_args;
  std::vector<NodeId> inputs;
  bool is_global = false;
  bool intrinsic_global = false;
  bool is_impure = false;
  Type out_type = Type::Any;
  SourcePos pos;
};

struct TriggerSpec {
  NodeId node = 0;  // the Trigger node itself
  NodeId predicate = 0;
  std::vector<NodeId> actions;
};

// Compiled, immutable workflow graph. Shared read-only by every rank engine.
struct Dag {
  std::vector<DagNode> nodes;
  std::vector<NodeId> topo_order;
  std::vector<TriggerSpec> triggers;
  std::vector<NodeId> impure_order;

  std::optional<NodeId> find(std::string_view name) const;
  const DagNode& node(std::string_view name) const;  // throws UndefinedName
  std::vector<std::vector<NodeId>> consumers() const;
  // Member names of `data.X` sources, in node id order.
  std::vector<std::string> data_fields() const;
  bool has_global() const;
  // Hash of the canonical DOT rendering; equal for identical compilations.
  std::uint64_t fingerprint() const;
};

// Literal nodes carry their value here.
inline constexpr std::string_view kConstOp = "const";
inline constexpr std::string_view kSourceOp = "source";
inline constexpr std::string_view kTriggerOp = "trigger";

// Declared types of `data.<field>` sources; `time` is always Int.
struct CompileOptions {
  std::map<std::string, Type> source_types;
  Type default_source_type = Type::Field;
};

// Low-level graph construction API. compile() lowers the AST through it;
// tests use it directly to wire graphs the DSL cannot express (cycles).
class DagBuilder {
 public:
  explicit DagBuilder(const OpRegistry& registry, CompileOptions options = {})
      : registry_(registry), options_(std::move(options)) {}

  // `time` or `data.<field>`.
  NodeId add_source(std::string name, SourcePos pos = {});
  NodeId add_constant(std::string name, Value value, SourcePos pos = {});
  NodeId add_op(std::string name, std::string op, std::vector<NodeId> inputs,
                ConstArgs const_args = {}, SourcePos pos = {});
  void set_inputs(NodeId id, std::vector<NodeId> inputs);
  NodeId add_trigger(std::string name, NodeId predicate, std::vector<NodeId> actions,
                     SourcePos pos = {});

  std::size_t size() const { return nodes_.size(); }
  const DagNode& node(NodeId id) const { return nodes_.at(id); }

  // Validates and freezes: cycle rejection, arity/type commit, topological
  // order, impure order, globalness. Throws Cycle/Type/Arity errors.
  Dag build() const;

 private:
  const OpRegistry& registry_;
  CompileOptions options_;
  std::vector<DagNode> nodes_;
  std::vector<TriggerSpec> triggers_;
};

// One entry per assignment target plus one per inline operator application.
// Maps each name to the id it lowers to inside `builder`.
std::map<std::string, NodeId> build_namespace(const WorkflowAst& ast, const OpRegistry& registry,
                                              DagBuilder& builder);

Dag compile(const WorkflowAst& ast, const OpRegistry& registry, const CompileOptions& options = {});

// Parses and compiles; convenience for tools and tests.
Dag compile_source(std::string_view source, const OpRegistry& registry,
                   const CompileOptions& options = {});

// Marks every node forward-reachable from an intrinsic global node.
Dag propagate_globalness(Dag dag);

std::string export_dot(const Dag& dag);

}  // namespace diva
