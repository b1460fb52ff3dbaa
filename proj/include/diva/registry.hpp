#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "diva/comm.hpp"
#include "diva/value.hpp"

namespace diva {

enum class NodeKind { Source, PureFn, ImpureFn, Action, Trigger };

const char* to_string(NodeKind kind);

using ConstArgs = std::map<std::string, Value, std::less<>>;

// Per-node mutable state owned by one engine (window buffers, latches).
struct OpState {
  virtual ~OpState() = default;
};

// Where actions put their side effects.
struct ActionEnv {
  std::filesystem::path outdir = ".";
  std::ostream* out = nullptr;
  int rank = 0;
  int size = 1;
  // Files already written during this run; the first write truncates.
  std::set<std::filesystem::path> touched;

  // Relative paths land in outdir (outdir/rank<r>/ when size > 1).
  std::filesystem::path resolve(const std::string& path) const;
};

struct OpContext {
  std::span<const Value> inputs;
  std::span<const std::string> input_names;
  const ConstArgs& const_args;
  OpState* state = nullptr;
  Communicator* comm = nullptr;  // set for global ops only
  ActionEnv* env = nullptr;      // set for actions only
  TimeStep t = 0;

  const Value& const_arg(std::string_view name) const;
  Communicator& communicator() const;
  ActionEnv& action_env() const;

  template <class S>
  S& state_as() const {
    auto* s = dynamic_cast<S*>(state);
    if (!s) throw Error(ErrorKind::Runtime, "operator state missing or of the wrong type");
    return *s;
  }
};

using OpEval = std::function<Value(OpContext&)>;
using StateFactory = std::function<std::unique_ptr<OpState>(const ConstArgs&)>;
using TypeRule = std::function<Type(std::span<const Type>)>;

// One formal parameter. Const parameters are bound at compile time from
// constant expressions and land in DagNode::const_args; the others become
// signal inputs in declaration order (a variadic parameter expands in place).
struct Param {
  std::string name;
  TypeSet accepts = TypeSet::any();
  bool is_const = false;
  bool variadic = false;
  bool optional = false;  // const param that may be left unbound
  std::optional<Value> default_value;
};

struct OpSpec {
  std::string name;
  NodeKind kind = NodeKind::PureFn;
  std::vector<Param> params;
  TypeRule out_type;  // empty: None for actions, Any otherwise
  bool is_global = false;
  bool needs_communicator = false;
  bool is_impure = false;
  StateFactory state_factory;
  OpEval eval;
};

TypeRule returns(Type t);

class OpRegistry {
 public:
  // Throws DuplicateOp or InconsistentFlags.
  void register_op(OpSpec spec);

  // Replaces an existing op (used by the engine's reload hook); throws
  // UnknownOperator if `spec.name` is not registered.
  void override_op(OpSpec spec);

  std::shared_ptr<const OpSpec> find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  std::vector<std::string> names() const;
  std::uint64_t generation() const { return generation_; }

 private:
  static void validate(const OpSpec& spec);

  std::map<std::string, std::shared_ptr<const OpSpec>, std::less<>> ops_;
  std::uint64_t generation_ = 0;
};

inline void register_op(OpRegistry& registry, OpSpec spec) {
  registry.register_op(std::move(spec));
}

}  // namespace diva
