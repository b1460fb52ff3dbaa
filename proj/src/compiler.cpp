#include <algorithm>
#include <deque>
#include <functional>
#include <queue>
#include <set>

#include "diva/dag.hpp"
#include "diva/parser.hpp"

namespace diva {

// --- Dag queries ---------------------------------------------------------------

std::optional<NodeId> Dag::find(std::string_view name) const {
  for (const auto& n : nodes) {
    if (n.name == name) return n.id;
  }
  return std::nullopt;
}

const DagNode& Dag::node(std::string_view name) const {
  if (auto id = find(name)) return nodes[*id];
  throw Error(ErrorKind::UndefinedName, "no node named '" + std::string(name) + "'");
}

std::vector<std::vector<NodeId>> Dag::consumers() const {
  std::vector<std::vector<NodeId>> out(nodes.size());
  for (const auto& n : nodes) {
    for (NodeId in : n.inputs) out[in].push_back(n.id);
  }
  return out;
}

std::vector<std::string> Dag::data_fields() const {
  std::vector<std::string> out;
  for (const auto& n : nodes) {
    if (n.kind == NodeKind::Source && n.name.rfind("data.", 0) == 0) {
      out.push_back(n.name.substr(5));
    }
  }
  return out;
}

bool Dag::has_global() const {
  return std::any_of(nodes.begin(), nodes.end(), [](const DagNode& n) { return n.is_global; });
}

std::uint64_t Dag::fingerprint() const {
  const std::string dot = export_dot(*this);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : dot) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// --- builder -------------------------------------------------------------------

NodeId DagBuilder::add_source(std::string name, SourcePos pos) {
  DagNode n;
  n.id = nodes_.size();
  n.name = std::move(name);
  n.kind = NodeKind::Source;
  n.op = kSourceOp;
  n.pos = pos;
  if (n.name == "time") {
    n.out_type = Type::Int;
  } else {
    auto it = options_.source_types.find(n.name.rfind("data.", 0) == 0 ? n.name.substr(5) : n.name);
    n.out_type = it != options_.source_types.end() ? it->second : options_.default_source_type;
  }
  nodes_.push_back(std::move(n));
  return nodes_.back().id;
}

NodeId DagBuilder::add_constant(std::string name, Value value, SourcePos pos) {
  DagNode n;
  n.id = nodes_.size();
  n.name = std::move(name);
  n.kind = NodeKind::PureFn;
  n.op = kConstOp;
  n.const_args.emplace("value", std::move(value));
  n.pos = pos;
  nodes_.push_back(std::move(n));
  return nodes_.back().id;
}

NodeId DagBuilder::add_op(std::string name, std::string op, std::vector<NodeId> inputs,
                          ConstArgs const_args, SourcePos pos) {
  auto spec = registry_.find(op);
  if (!spec) throw Error(ErrorKind::UnknownOperator, "unknown operator '" + op + "'", pos);
  DagNode n;
  n.id = nodes_.size();
  n.name = std::move(name);
  n.kind = spec->kind;
  n.op = std::move(op);
  n.inputs = std::move(inputs);
  n.const_args = std::move(const_args);
  n.is_impure = spec->is_impure;
  n.intrinsic_global = spec->is_global;
  n.pos = pos;
  nodes_.push_back(std::move(n));
  return nodes_.back().id;
}

void DagBuilder::set_inputs(NodeId id, std::vector<NodeId> inputs) {
  nodes_.at(id).inputs = std::move(inputs);
}

NodeId DagBuilder::add_trigger(std::string name, NodeId predicate, std::vector<NodeId> actions,
                               SourcePos pos) {
  DagNode n;
  n.id = nodes_.size();
  n.name = std::move(name);
  n.kind = NodeKind::Trigger;
  n.op = kTriggerOp;
  n.inputs = {predicate};
  n.out_type = Type::None;
  n.pos = pos;
  nodes_.push_back(std::move(n));
  triggers_.push_back(TriggerSpec{nodes_.back().id, predicate, std::move(actions)});
  return nodes_.back().id;
}

namespace {

// Nodes left after Kahn's algorithm each have a remaining input, so walking
// inputs backwards must revisit a node; the revisited suffix is a cycle.
std::vector<std::string> find_cycle(const std::vector<DagNode>& nodes,
                                    const std::vector<bool>& remaining) {
  NodeId start = 0;
  while (!remaining[start]) ++start;
  std::vector<NodeId> path;
  std::vector<int> seen_at(nodes.size(), -1);
  NodeId cur = start;
  while (seen_at[cur] < 0) {
    seen_at[cur] = static_cast<int>(path.size());
    path.push_back(cur);
    NodeId next = cur;
    for (NodeId in : nodes[cur].inputs) {
      if (remaining[in]) {
        next = in;
        break;
      }
    }
    cur = next;
  }
  std::vector<NodeId> cycle(path.begin() + seen_at[cur], path.end());
  std::reverse(cycle.begin(), cycle.end());  // data-flow direction
  std::vector<std::string> names;
  for (NodeId id : cycle) names.push_back(nodes[id].name);
  return names;
}

std::string join(const std::vector<std::string>& xs, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

}  // namespace

Dag DagBuilder::build() const {
  Dag dag;
  dag.nodes = nodes_;
  dag.triggers = triggers_;
  const std::size_t n = dag.nodes.size();

  for (const auto& node : dag.nodes) {
    for (NodeId in : node.inputs) {
      if (in >= n) {
        throw Error(ErrorKind::Arity, "node '" + node.name + "' references missing input", node.pos);
      }
      const auto k = dag.nodes[in].kind;
      if (k == NodeKind::Action || k == NodeKind::Trigger) {
        throw Error(ErrorKind::Type,
                    "node '" + node.name + "' cannot consume " + to_string(k) + " '" +
                        dag.nodes[in].name + "'",
                    node.pos);
      }
    }
    if (node.kind == NodeKind::Source && !node.inputs.empty()) {
      throw Error(ErrorKind::Arity, "source '" + node.name + "' cannot have inputs", node.pos);
    }
  }

  // Kahn's algorithm, smallest ready id first.
  std::vector<std::size_t> indegree(n, 0);
  const auto consumers = dag.consumers();
  for (const auto& node : dag.nodes) indegree[node.id] = node.inputs.size();
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (NodeId i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  while (!ready.empty()) {
    const NodeId id = ready.top();
    ready.pop();
    dag.topo_order.push_back(id);
    for (NodeId c : consumers[id]) {
      if (--indegree[c] == 0) ready.push(c);
    }
  }
  if (dag.topo_order.size() != n) {
    std::vector<bool> remaining(n, true);
    for (NodeId id : dag.topo_order) remaining[id] = false;
    auto cycle = find_cycle(dag.nodes, remaining);
    throw Error(ErrorKind::Cycle, "cycle detected: " + join(cycle, " -> ") + " -> " + cycle.front(),
                {}, cycle);
  }

  // Type and arity commit in topological order.
  for (NodeId id : dag.topo_order) {
    DagNode& node = dag.nodes[id];
    std::vector<Type> in_types;
    for (NodeId in : node.inputs) in_types.push_back(dag.nodes[in].out_type);
    if (node.kind == NodeKind::Source) {
      continue;
    }
    if (node.kind == NodeKind::Trigger) {
      if (in_types.size() != 1 || in_types[0] != Type::Bool) {
        throw Error(ErrorKind::Type,
                    "trigger predicate must be bool, got " +
                        std::string(in_types.empty() ? "nothing" : to_string(in_types[0])),
                    node.pos);
      }
      continue;
    }
    if (node.op == kConstOp) {
      node.out_type = node.const_args.at("value").type();
      continue;
    }
    auto spec = registry_.find(node.op);
    if (!spec) {
      throw Error(ErrorKind::UnknownOperator, "unknown operator '" + node.op + "'", node.pos);
    }
    // Match inputs against the signal parameters.
    std::vector<const Param*> signal;
    for (const auto& p : spec->params) {
      if (!p.is_const) signal.push_back(&p);
    }
    const bool variadic = std::any_of(signal.begin(), signal.end(),
                                      [](const Param* p) { return p->variadic; });
    const std::size_t fixed = signal.size() - (variadic ? 1 : 0);
    if (variadic ? in_types.size() < fixed + 1 : in_types.size() != fixed) {
      throw Error(ErrorKind::Arity,
                  "'" + node.op + "' expects " + (variadic ? "at least " : "") +
                      std::to_string(variadic ? fixed + 1 : fixed) + " signal argument(s), got " +
                      std::to_string(in_types.size()),
                  node.pos);
    }
    const std::size_t extra = in_types.size() - fixed;  // slots taken by the variadic
    std::size_t k = 0;
    for (const Param* p : signal) {
      const std::size_t count = p->variadic ? extra : 1;
      for (std::size_t c = 0; c < count; ++c, ++k) {
        if (!p->accepts.accepts(in_types[k])) {
          throw Error(ErrorKind::Type,
                      "argument '" + p->name + "' of '" + node.op + "' expects " +
                          p->accepts.describe() + ", got " + to_string(in_types[k]) + " from '" +
                          dag.nodes[node.inputs[k]].name + "'",
                      node.pos);
        }
      }
    }
    for (const auto& p : spec->params) {
      if (!p.is_const) continue;
      auto it = node.const_args.find(p.name);
      if (it == node.const_args.end()) {
        if (p.default_value) {
          node.const_args.emplace(p.name, *p.default_value);
        } else if (!p.optional) {
          throw Error(ErrorKind::Arity, "'" + node.op + "' is missing constant argument '" +
                                            p.name + "'", node.pos);
        }
        continue;
      }
      if (!p.accepts.accepts(it->second.type())) {
        throw Error(ErrorKind::Type,
                    "constant argument '" + p.name + "' of '" + node.op + "' expects " +
                        p.accepts.describe() + ", got " + to_string(it->second.type()),
                    node.pos);
      }
    }
    for (const auto& [name, _] : node.const_args) {
      const bool known = std::any_of(spec->params.begin(), spec->params.end(),
                                     [&](const Param& p) { return p.is_const && p.name == name; });
      if (!known) {
        throw Error(ErrorKind::Arity, "'" + node.op + "' has no constant argument '" + name + "'",
                    node.pos);
      }
    }
    if (spec->out_type) {
      try {
        node.out_type = spec->out_type(in_types);
      } catch (const Error& e) {
        throw Error(e.kind(), "'" + node.name + "': " + e.message(), node.pos);
      }
    } else {
      node.out_type = spec->kind == NodeKind::Action ? Type::None : Type::Any;
    }
    if (spec->is_impure && spec->state_factory) {
      // Instantiating once surfaces configuration errors at compile time.
      try {
        (void)spec->state_factory(node.const_args);
      } catch (const Error& e) {
        throw Error(e.kind(), "'" + node.name + "': " + e.message(), node.pos);
      }
    }
  }

  for (NodeId id : dag.topo_order) {
    if (dag.nodes[id].is_impure) dag.impure_order.push_back(id);
  }
  return propagate_globalness(std::move(dag));
}

Dag propagate_globalness(Dag dag) {
  const auto consumers = dag.consumers();
  std::deque<NodeId> frontier;
  for (auto& node : dag.nodes) {
    node.is_global = node.intrinsic_global;
    if (node.is_global) frontier.push_back(node.id);
  }
  while (!frontier.empty()) {
    const NodeId id = frontier.front();
    frontier.pop_front();
    for (NodeId c : consumers[id]) {
      if (!dag.nodes[c].is_global) {
        dag.nodes[c].is_global = true;
        frontier.push_back(c);
      }
    }
  }
  return dag;
}

// --- AST lowering ---------------------------------------------------------------

namespace {

const char* op_name(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "add";
    case BinaryOp::Sub: return "sub";
    case BinaryOp::Mul: return "mul";
    case BinaryOp::Div: return "div";
    case BinaryOp::Mod: return "mod";
    case BinaryOp::Lt: return "lt";
    case BinaryOp::Le: return "le";
    case BinaryOp::Gt: return "gt";
    case BinaryOp::Ge: return "ge";
    case BinaryOp::Eq: return "eq";
    case BinaryOp::Ne: return "ne";
    case BinaryOp::And: return "and";
    case BinaryOp::Or: return "or";
  }
  return "?";
}

const char* op_name(UnaryOp op) { return op == UnaryOp::Neg ? "neg" : "not"; }

class Lowering {
 public:
  Lowering(const OpRegistry& registry, DagBuilder& builder)
      : registry_(registry), builder_(builder) {}

  std::map<std::string, NodeId> run(const WorkflowAst& ast) {
    std::size_t trigger_index = 0;
    for (const auto& st : ast.statements) {
      if (const auto* a = std::get_if<Assign>(&st.stmt)) {
        assign(*a, st.pos);
      } else {
        trigger(std::get<TriggerBlock>(st.stmt), "trigger" + std::to_string(trigger_index++),
                st.pos);
      }
    }
    return names_;
  }

 private:
  void assign(const Assign& a, SourcePos pos) {
    if (a.targets.size() != a.exprs.size() || a.targets.empty()) {
      throw Error(ErrorKind::Arity, "assignment target/expression count mismatch", pos);
    }
    for (std::size_t i = 0; i < a.targets.size(); ++i) {
      const std::string& target = a.targets[i];
      const SourcePos tpos = i < a.target_pos.size() ? a.target_pos[i] : pos;
      if (names_.count(target)) {
        throw Error(ErrorKind::DuplicateName, "'" + target + "' is already defined", tpos,
                    {target});
      }
      if (auto c = fold(a.exprs[i])) constants_[target] = *c;
      const NodeId id = lower(a.exprs[i], target, true, false);
      names_[target] = id;
    }
  }

  void trigger(const TriggerBlock& tb, const std::string& base, SourcePos pos) {
    const NodeId pred = lower(tb.predicate, base, false, false);
    std::vector<NodeId> actions;
    for (const auto& call : tb.body) {
      const auto* c = std::get_if<Call>(&call.node);
      if (!c) throw Error(ErrorKind::Type, "Trigger body may only contain action calls", call.pos);
      actions.push_back(lower(call, base, false, true));
    }
    builder_.add_trigger(base, pred, std::move(actions), pos);
  }

  std::string synth(const std::string& base) { return base + "#" + std::to_string(++counter_[base]); }

  NodeId source(const std::string& name, SourcePos pos) {
    if (auto it = sources_.find(name); it != sources_.end()) return it->second;
    const NodeId id = builder_.add_source(name, pos);
    sources_[name] = id;
    names_[name] = id;
    return id;
  }

  NodeId lower(const AstExpr& e, const std::string& base, bool top, bool action_ctx) {
    return std::visit(
        [&](const auto& n) -> NodeId {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Literal>) {
            return named(builder_.add_constant(top ? base : synth(base), n.value, e.pos));
          } else if constexpr (std::is_same_v<T, Ref>) {
            if (n.name == "time") return source("time", e.pos);
            if (n.name == "data") {
              throw Error(ErrorKind::UndefinedName, "'data' must be used as data.<field>", e.pos,
                          {n.name});
            }
            auto it = names_.find(n.name);
            if (it == names_.end()) {
              throw Error(ErrorKind::UndefinedName, "undefined name '" + n.name + "'", e.pos,
                          {n.name});
            }
            return it->second;
          } else if constexpr (std::is_same_v<T, Member>) {
            const auto* r = std::get_if<Ref>(&n.base->node);
            if (!r || r->name != "data") {
              throw Error(ErrorKind::Type, "member access is only supported on 'data'", e.pos);
            }
            return source("data." + n.field, e.pos);
          } else if constexpr (std::is_same_v<T, Unary>) {
            const std::string name = top ? base : synth(base);
            const NodeId in = lower(*n.operand, base, false, false);
            return named(builder_.add_op(name, op_name(n.op), {in}, {}, e.pos));
          } else if constexpr (std::is_same_v<T, Binary>) {
            const std::string name = top ? base : synth(base);
            const NodeId l = lower(*n.lhs, base, false, false);
            const NodeId r = lower(*n.rhs, base, false, false);
            return named(builder_.add_op(name, op_name(n.op), {l, r}, {}, e.pos));
          } else {
            return call(n, e.pos, base, top, action_ctx);
          }
        },
        e.node);
  }

  NodeId named(NodeId id) {
    names_[builder_.node(id).name] = id;
    return id;
  }

  NodeId call(const Call& c, SourcePos pos, const std::string& base, bool top, bool action_ctx) {
    auto spec = registry_.find(c.callee);
    if (!spec || c.callee == kConstOp) {
      throw Error(ErrorKind::UnknownOperator, "unknown operator '" + c.callee + "'", pos,
                  {c.callee});
    }
    if (spec->kind == NodeKind::Action && !action_ctx) {
      throw Error(ErrorKind::Type,
                  "action '" + c.callee + "' may only be called inside a Trigger block", pos);
    }
    if (spec->kind != NodeKind::Action && action_ctx) {
      throw Error(ErrorKind::Type, "'" + c.callee + "' is not an action", pos);
    }
    const std::string name = top ? base : synth(base);
    const auto& params = spec->params;

    // Bind named arguments, then positional ones to the remaining params.
    std::vector<const AstExpr*> bound_single(params.size(), nullptr);
    std::vector<std::vector<const AstExpr*>> bound_var(params.size());
    std::vector<bool> by_name(params.size(), false);
    for (const auto& na : c.named) {
      auto it = std::find_if(params.begin(), params.end(),
                             [&](const Param& p) { return p.name == na.name; });
      if (it == params.end()) {
        throw Error(ErrorKind::Arity, "'" + c.callee + "' has no parameter '" + na.name + "'", pos);
      }
      const std::size_t idx = static_cast<std::size_t>(it - params.begin());
      by_name[idx] = true;
      if (it->variadic) {
        bound_var[idx].push_back(&*na.value);
      } else {
        bound_single[idx] = &*na.value;
      }
    }
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!by_name[i]) open.push_back(i);
    }
    const std::size_t k = c.positional.size();
    std::size_t var_take = 0;
    const auto var_it = std::find_if(open.begin(), open.end(),
                                     [&](std::size_t i) { return params[i].variadic; });
    if (var_it != open.end()) {
      std::size_t required_others = 0;
      for (std::size_t i : open) {
        if (!params[i].variadic && !params[i].default_value && !params[i].optional) ++required_others;
      }
      if (k < required_others + 1) {
        throw Error(ErrorKind::Arity,
                    "'" + c.callee + "' expects at least " + std::to_string(required_others + 1) +
                        " argument(s), got " + std::to_string(k),
                    pos);
      }
      var_take = k - required_others;
    }
    std::size_t next = 0;
    for (std::size_t i : open) {
      if (next >= k) break;
      if (params[i].variadic) {
        for (std::size_t j = 0; j < var_take; ++j) bound_var[i].push_back(&c.positional[next++]);
      } else {
        bound_single[i] = &c.positional[next++];
      }
    }
    if (next < k) {
      throw Error(ErrorKind::Arity,
                  "'" + c.callee + "' takes at most " + std::to_string(next) +
                      " positional argument(s), got " + std::to_string(k),
                  pos);
    }

    std::vector<NodeId> inputs;
    ConstArgs consts;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Param& p = params[i];
      if (p.variadic) {
        if (bound_var[i].empty()) {
          throw Error(ErrorKind::Arity,
                      "'" + c.callee + "' needs at least one '" + p.name + "' argument", pos);
        }
        for (const AstExpr* a : bound_var[i]) inputs.push_back(lower(*a, base, false, false));
        continue;
      }
      if (!bound_single[i]) {
        if (p.default_value || p.optional) continue;
        throw Error(ErrorKind::Arity, "'" + c.callee + "' is missing argument '" + p.name + "'",
                    pos);
      }
      if (p.is_const) {
        auto v = fold(*bound_single[i]);
        if (!v) {
          throw Error(ErrorKind::Type,
                      "argument '" + p.name + "' of '" + c.callee +
                          "' must be a compile-time constant",
                      bound_single[i]->pos);
        }
        consts.emplace(p.name, std::move(*v));
      } else {
        inputs.push_back(lower(*bound_single[i], base, false, false));
      }
    }
    return named(builder_.add_op(name, c.callee, std::move(inputs), std::move(consts), pos));
  }

  // Compile-time evaluation of literal expressions and names bound to them.
  std::optional<Value> fold(const AstExpr& e) {
    if (const auto* l = std::get_if<Literal>(&e.node)) return l->value;
    if (const auto* r = std::get_if<Ref>(&e.node)) {
      auto it = constants_.find(r->name);
      if (it != constants_.end()) return it->second;
      return std::nullopt;
    }
    auto apply = [&](const char* op, std::vector<Value> args) -> std::optional<Value> {
      auto spec = registry_.find(op);
      if (!spec || spec->is_impure || spec->is_global) return std::nullopt;
      std::vector<std::string> names(args.size());
      ConstArgs none;
      OpContext ctx{args, names, none};
      // Ill-typed or failing constants stay ordinary nodes; the builder's
      // signature check or the runtime then reports them.
      try {
        return spec->eval(ctx);
      } catch (const Error&) {
        return std::nullopt;
      }
    };
    if (const auto* u = std::get_if<Unary>(&e.node)) {
      auto v = fold(*u->operand);
      if (!v) return std::nullopt;
      return apply(op_name(u->op), {*v});
    }
    if (const auto* b = std::get_if<Binary>(&e.node)) {
      auto l = fold(*b->lhs);
      auto r = fold(*b->rhs);
      if (!l || !r) return std::nullopt;
      return apply(op_name(b->op), {*l, *r});
    }
    return std::nullopt;
  }

  const OpRegistry& registry_;
  DagBuilder& builder_;
  std::map<std::string, NodeId> names_;
  std::map<std::string, NodeId> sources_;
  std::map<std::string, Value> constants_;
  std::map<std::string, int> counter_;
};

}  // namespace

std::map<std::string, NodeId> build_namespace(const WorkflowAst& ast, const OpRegistry& registry,
                                              DagBuilder& builder) {
  return Lowering(registry, builder).run(ast);
}

Dag compile(const WorkflowAst& ast, const OpRegistry& registry, const CompileOptions& options) {
  DagBuilder builder(registry, options);
  build_namespace(ast, registry, builder);
  return builder.build();
}

Dag compile_source(std::string_view source, const OpRegistry& registry,
                   const CompileOptions& options) {
  return compile(
      parse_source(source, [&](std::string_view n) { return registry.contains(n); }), registry,
      options);
}

// --- DOT ------------------------------------------------------------------------

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

const char* shape_of(const DagNode& n) {
  switch (n.kind) {
    case NodeKind::Source: return n.name == "time" ? "circle" : "box";
    case NodeKind::PureFn: return "ellipse";
    case NodeKind::ImpureFn: return "diamond";
    case NodeKind::Action: return "doubleoctagon";
    case NodeKind::Trigger: return "triangle";
  }
  return "ellipse";
}

}  // namespace

std::string export_dot(const Dag& dag) {
  std::string out = "digraph diva {\n";
  for (const auto& n : dag.nodes) {
    std::string label = n.name;
    if (n.op == kConstOp) {
      label += "\n= " + to_display(n.const_args.at("value"));
    } else if (n.kind != NodeKind::Source && n.kind != NodeKind::Trigger && n.op != n.name) {
      label += "\n" + n.op;
    }
    out += "  n" + std::to_string(n.id) + " [label=\"" + dot_escape(label) + "\", shape=" +
           shape_of(n) + (n.is_global ? ", color=red" : "") + "];\n";
  }
  std::set<std::pair<NodeId, NodeId>> dashed;
  for (const auto& t : dag.triggers) {
    for (NodeId a : t.actions) dashed.emplace(t.node, a);
  }
  for (const auto& n : dag.nodes) {
    for (NodeId in : n.inputs) {
      out += "  n" + std::to_string(in) + " -> n" + std::to_string(n.id) + ";\n";
    }
  }
  for (const auto& [t, a] : dashed) {
    out += "  n" + std::to_string(t) + " -> n" + std::to_string(a) + " [style=dashed];\n";
  }
  out += "}\n";
  return out;
}

}  // namespace diva
