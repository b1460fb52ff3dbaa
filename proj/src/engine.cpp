#include "diva/engine.hpp"

namespace diva {

Engine::Engine(std::shared_ptr<const Dag> dag, const OpRegistry& registry, Communicator comm,
               ActionEnv env, TraceSink* sink, EngineOptions options)
    : dag_(std::move(dag)),
      registry_(registry),
      comm_(std::move(comm)),
      env_(std::move(env)),
      sink_(sink),
      options_(options),
      t_(options.start_step) {
  const std::size_t n = dag_->nodes.size();
  specs_.resize(n);
  states_.resize(n);
  input_names_.resize(n);
  cache_.resize(n);
  counts_.resize(n);
  env_.rank = comm_.rank();
  env_.size = comm_.size();
  reload();
  for (const auto& node : dag_->nodes) {
    for (NodeId in : node.inputs) input_names_[node.id].push_back(dag_->nodes[in].name);
    if (node.is_impure) states_[node.id] = specs_[node.id]->state_factory(node.const_args);
    if (node.is_global && node.kind != NodeKind::Action) global_nodes_.push_back(node.id);
  }
}

void Engine::reload() {
  for (const auto& node : dag_->nodes) {
    if (node.kind == NodeKind::Source || node.kind == NodeKind::Trigger) continue;
    auto spec = registry_.find(node.op);
    if (!spec) {
      throw Error(ErrorKind::UnknownOperator, "operator '" + node.op + "' of node '" + node.name +
                                                  "' is not registered");
    }
    specs_[node.id] = std::move(spec);
    // Pure results may change under a new implementation; state is kept.
    if (node.kind == NodeKind::PureFn && node.op != kConstOp) cache_[node.id].cached = false;
  }
  reload_requested_ = false;
}

const NodeCounts& Engine::counts(std::string_view name) const { return counts_.at(dag_->node(name).id); }

std::optional<Value> Engine::value_of(NodeId id) const {
  const Entry& e = cache_.at(id);
  if (e.step != t_ - 1) return std::nullopt;
  return e.value;
}

std::optional<Value> Engine::value_of(std::string_view name) const {
  return value_of(dag_->node(name).id);
}

void Engine::emit(const std::string& node, TraceEv ev, const Value* v) {
  if (!sink_) return;
  TraceEvent e;
  e.t = t_;
  e.rank = comm_.rank();
  e.node = node;
  e.ev = ev;
  if (v && options_.record_values) e.value = *v;
  e.epoch = comm_.epoch();
  e.seq = seq_++;
  sink_->emit(e);
}

bool Engine::is_shortcircuit(NodeId id) const {
  const DagNode& n = dag_->nodes[id];
  return n.kind == NodeKind::PureFn && n.inputs.size() == 2 && (n.op == "and" || n.op == "or");
}

Value Engine::compute(NodeId id, const std::vector<Value>& inputs) {
  const DagNode& node = dag_->nodes[id];
  const OpSpec& spec = *specs_[id];
  OpContext ctx{inputs, input_names_[id], node.const_args};
  ctx.state = states_[id].get();
  ctx.comm = spec.is_global ? &comm_ : nullptr;
  ctx.env = node.kind == NodeKind::Action ? &env_ : nullptr;
  ctx.t = t_;
  try {
    return spec.eval(ctx);
  } catch (const Error& e) {
    throw e.annotated("node '" + node.name + "' at step " + std::to_string(t_));
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Runtime,
                "node '" + node.name + "' at step " + std::to_string(t_) + ": " + e.what());
  }
}

const Value& Engine::store(NodeId id, Value v, bool bump_always) {
  Entry& e = cache_[id];
  if (bump_always || !e.cached || !value_eq(e.value, v)) ++e.version;
  e.value = std::move(v);
  e.cached = true;
  e.step = t_;
  return e.value;
}

const Value& Engine::evaluate_node(NodeId id) {
  Entry& e = cache_[id];
  if (e.step == t_) return e.value;
  const DagNode& node = dag_->nodes[id];

  if (node.kind == NodeKind::Source) {
    if (node.name == "time") return store(id, Value::integer(t_), false);
    const std::string_view field = std::string_view(node.name).substr(5);
    auto it = sources_->find(field);
    if (it == sources_->end()) {
      throw Error(ErrorKind::SourceMissing, "no value for source '" + node.name + "' at step " +
                                                std::to_string(t_));
    }
    if (node.out_type != Type::Any && it->second.type() != node.out_type) {
      throw Error(ErrorKind::TypeMismatch, "source '" + node.name + "' declared " +
                                               to_string(node.out_type) + ", got " +
                                               to_string(it->second.type()));
    }
    return store(id, it->second, false);
  }
  if (node.kind == NodeKind::Action || node.kind == NodeKind::Trigger) {
    throw Error(ErrorKind::Runtime, "'" + node.name + "' is not a value node");
  }
  if (is_shortcircuit(id)) return evaluate_bool_shortcircuit(id);

  std::vector<Value> inputs;
  std::vector<std::uint64_t> versions;
  inputs.reserve(node.inputs.size());
  for (NodeId in : node.inputs) {
    inputs.push_back(evaluate_node(in));
    versions.push_back(cache_[in].version);
  }
  // Global nodes always recompute so every rank performs the same collectives.
  if (!node.is_impure && !node.is_global && e.cached && e.input_versions == versions) {
    e.step = t_;
    ++counts_[id].cache_hit;
    emit(id, TraceEv::CacheHit, &e.value);
    if (hook_) hook_(t_, id, e.value);
    return e.value;
  }
  Value v = compute(id, inputs);
  e.input_versions = std::move(versions);
  const Value& out = store(id, std::move(v), false);
  ++counts_[id].evaluate;
  emit(id, TraceEv::Evaluate, &out);
  if (hook_) hook_(t_, id, out);
  return out;
}

const Value& Engine::evaluate_bool_shortcircuit(NodeId id) {
  const DagNode& node = dag_->nodes[id];
  const bool is_and = node.op == "and";
  const NodeId rhs_id = node.inputs[1];
  const bool lhs = evaluate_node(node.inputs[0]).as_bool();
  const bool decided = is_and ? !lhs : lhs;

  bool run_rhs = !decided;
  if (dag_->nodes[rhs_id].is_global) {
    // The rhs performs collectives: either every rank evaluates it or none.
    emit(id, TraceEv::GlobalSync);
    const double need = decided ? 0.0 : 1.0;
    run_rhs = comm_.allreduce(ReduceOp::Or, std::span<const double>(&need, 1))[0] != 0.0;
  }
  bool result = lhs;
  if (run_rhs) {
    const bool rhs = evaluate_node(rhs_id).as_bool();
    if (!decided) result = rhs;
  } else if (cache_[rhs_id].step != t_) {
    ++counts_[rhs_id].skip;
    emit(rhs_id, TraceEv::Skip);
  }
  const Value& out = store(id, Value::boolean(result), false);
  ++counts_[id].evaluate;
  emit(id, TraceEv::Evaluate, &out);
  if (hook_) hook_(t_, id, out);
  return out;
}

std::vector<bool> Engine::demand_from(const std::vector<NodeId>& roots,
                                      std::vector<bool> demanded) const {
  std::vector<NodeId> stack(roots.begin(), roots.end());
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    if (demanded[id]) continue;
    demanded[id] = true;
    const auto& inputs = dag_->nodes[id].inputs;
    // The rhs of && / || is pulled lazily by the operator itself.
    const std::size_t n = is_shortcircuit(id) ? 1 : inputs.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (!demanded[inputs[i]]) stack.push_back(inputs[i]);
    }
  }
  return demanded;
}

std::vector<bool> Engine::sync_global_demand(std::vector<bool> demanded) {
  if (global_nodes_.empty()) return demanded;
  std::vector<bool> bits;
  bits.reserve(global_nodes_.size());
  for (NodeId g : global_nodes_) bits.push_back(demanded[g]);
  emit("<demand>", TraceEv::GlobalSync);
  const auto all = comm_.allreduce(ReduceOp::Or, bits);
  std::vector<NodeId> added;
  for (std::size_t i = 0; i < global_nodes_.size(); ++i) {
    if (all[i] && !demanded[global_nodes_[i]]) added.push_back(global_nodes_[i]);
  }
  return demand_from(added, std::move(demanded));
}

std::vector<NodeId> Engine::step(const SourceValues& sources) {
  sources_ = &sources;
  const Dag& dag = *dag_;
  for (const auto& field : dag.data_fields()) {
    if (!sources.count(field)) {
      throw Error(ErrorKind::SourceMissing,
                  "no value for source 'data." + field + "' at step " + std::to_string(t_));
    }
  }

  // Pass 1: reload point.
  if (options_.reload_every > 0 && t_ > options_.start_step &&
      (t_ - options_.start_step) % options_.reload_every == 0) {
    reload_requested_ = true;
  }
  if (reload_requested_) reload();

  // Pass 2: impure nodes, eagerly, once each.
  for (NodeId id : dag.impure_order) evaluate_node(id);

  // Pass 3: predicates everywhere, then the demanded part of the graph.
  std::vector<bool> fired(dag.triggers.size(), false);
  std::vector<NodeId> roots;
  for (std::size_t i = 0; i < dag.triggers.size(); ++i) {
    const auto& trig = dag.triggers[i];
    fired[i] = evaluate_node(trig.predicate).as_bool();
    if (fired[i]) roots.insert(roots.end(), trig.actions.begin(), trig.actions.end());
  }
  std::vector<bool> demanded = demand_from(roots, std::vector<bool>(dag.nodes.size(), false));
  if (options_.demand_sync && dag.has_global()) demanded = sync_global_demand(std::move(demanded));
  for (NodeId id : dag.topo_order) {
    const NodeKind k = dag.nodes[id].kind;
    if (demanded[id] && k != NodeKind::Action && k != NodeKind::Trigger) evaluate_node(id);
  }

  std::vector<NodeId> out;
  for (std::size_t i = 0; i < dag.triggers.size(); ++i) {
    for (NodeId a : dag.triggers[i].actions) {
      if (!fired[i]) {
        emit(a, TraceEv::ActionSkip);
        continue;
      }
      std::vector<Value> inputs;
      for (NodeId in : dag.nodes[a].inputs) inputs.push_back(evaluate_node(in));
      compute(a, inputs);
      cache_[a].step = t_;
      ++counts_[a].fire;
      emit(a, TraceEv::ActionFire);
      out.push_back(a);
    }
  }

  if (options_.end_of_step_barrier && comm_.size() > 1) comm_.barrier();
  if (sink_) sink_->end_step(comm_.rank(), t_);
  sources_ = nullptr;
  ++t_;
  return out;
}

}  // namespace diva
