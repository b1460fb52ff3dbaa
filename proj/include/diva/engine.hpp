#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "diva/dag.hpp"
#include "diva/registry.hpp"
#include "diva/trace.hpp"

namespace diva {

// Simulation outputs for one step, keyed by field name (`HeatRelease` for
// `data.HeatRelease`). `time` is supplied by the engine.
using SourceValues = std::map<std::string, Value, std::less<>>;

struct EngineOptions {
  // Off only in control experiments: reproduces the deadlock-prone schedule.
  bool demand_sync = true;
  bool end_of_step_barrier = true;
  bool record_values = true;  // attach values to evaluate/cache_hit events
  int reload_every = 0;       // request a pass-1 reload every N steps (0 = never)
  TimeStep start_step = 0;
};

struct NodeCounts {
  std::uint64_t evaluate = 0;
  std::uint64_t cache_hit = 0;
  std::uint64_t skip = 0;
  std::uint64_t fire = 0;
};

// One rank's lazy workflow manager.
class Engine {
 public:
  using ValueHook = std::function<void(TimeStep, NodeId, const Value&)>;

  Engine(std::shared_ptr<const Dag> dag, const OpRegistry& registry, Communicator comm,
         ActionEnv env = {}, TraceSink* sink = nullptr, EngineOptions options = {});

  // Runs the four passes for the current step and advances it. Returns ids of
  // the actions fired on this rank.
  std::vector<NodeId> step(const SourceValues& sources);

  // Picks up registry overrides at the start of the next step.
  void request_reload() { reload_requested_ = true; }

  TimeStep current_step() const { return t_; }
  const Dag& dag() const { return *dag_; }
  Communicator& comm() { return comm_; }
  ActionEnv& env() { return env_; }
  const NodeCounts& counts(NodeId id) const { return counts_.at(id); }
  const NodeCounts& counts(std::string_view name) const;

  // Value computed during the most recent step, if the node was demanded.
  std::optional<Value> value_of(NodeId id) const;
  std::optional<Value> value_of(std::string_view name) const;

  // Called for every node value that becomes visible (evaluate or cache hit).
  void on_value(ValueHook hook) { hook_ = std::move(hook); }

 private:
  struct Entry {
    Value value;
    std::uint64_t version = 0;
    std::vector<std::uint64_t> input_versions;
    bool cached = false;
    TimeStep step = -1;  // step at which `value` was last produced
  };

  void reload();
  const Value& evaluate_node(NodeId id);
  const Value& evaluate_bool_shortcircuit(NodeId id);
  Value compute(NodeId id, const std::vector<Value>& inputs);
  const Value& store(NodeId id, Value v, bool bump_always);
  std::vector<bool> demand_from(const std::vector<NodeId>& roots,
                                std::vector<bool> demanded) const;
  std::vector<bool> sync_global_demand(std::vector<bool> demanded);
  void emit(const std::string& node, TraceEv ev, const Value* v = nullptr);
  void emit(NodeId id, TraceEv ev, const Value* v = nullptr) {
    emit(dag_->nodes[id].name, ev, v);
  }
  bool is_shortcircuit(NodeId id) const;

  std::shared_ptr<const Dag> dag_;
  const OpRegistry& registry_;
  Communicator comm_;
  ActionEnv env_;
  TraceSink* sink_;
  EngineOptions options_;
  TimeStep t_;
  bool reload_requested_ = false;
  const SourceValues* sources_ = nullptr;

  std::vector<std::shared_ptr<const OpSpec>> specs_;
  std::vector<std::unique_ptr<OpState>> states_;
  std::vector<std::vector<std::string>> input_names_;
  std::vector<Entry> cache_;
  std::vector<NodeCounts> counts_;
  std::vector<NodeId> global_nodes_;  // non-action globals in id order
  std::uint64_t seq_ = 0;
  ValueHook hook_;
};

}  // namespace diva
