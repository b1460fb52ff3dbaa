#include "diva/eager.hpp"

#include <mutex>
#include <sstream>

namespace diva {

EagerResult run_eager_oracle(const Dag& dag, const OpRegistry& registry, const Workload& workload,
                             const EagerOptions& options) {
  if (options.ranks < 1 || options.steps < 0) throw Error(ErrorKind::Config, "bad oracle run shape");
  auto group = std::make_shared<CommGroup>(options.ranks);
  const std::uint64_t fp = dag.fingerprint();
  std::mutex mu;
  EagerResult result;
  result.fire_counts.assign(options.ranks, std::vector<std::uint64_t>(dag.nodes.size(), 0));
  MemorySink sink;

  run_ranks(group, [&](int rank) {
    Communicator comm(group, rank, fp);
    std::ostringstream printed;
    ActionEnv env;
    env.outdir = options.outdir;
    env.out = &printed;
    env.rank = rank;
    env.size = options.ranks;
    const std::size_t n = dag.nodes.size();
    std::vector<std::shared_ptr<const OpSpec>> specs(n);
    std::vector<std::unique_ptr<OpState>> states(n);
    std::vector<std::vector<std::string>> names(n);
    for (const auto& node : dag.nodes) {
      if (node.kind != NodeKind::Source && node.kind != NodeKind::Trigger) {
        specs[node.id] = registry.find(node.op);
        if (!specs[node.id]) throw Error(ErrorKind::UnknownOperator, "unknown operator " + node.op);
      }
      if (node.is_impure) states[node.id] = specs[node.id]->state_factory(node.const_args);
      for (NodeId in : node.inputs) names[node.id].push_back(dag.nodes[in].name);
    }
    std::uint64_t seq = 0;
    auto record = [&](TimeStep t, const DagNode& node, TraceEv ev, const Value* v) {
      if (!options.capture_trace) return;
      TraceEvent e;
      e.t = t;
      e.rank = rank;
      e.node = node.name;
      e.ev = ev;
      if (v) e.value = *v;
      e.epoch = comm.epoch();
      e.seq = seq++;
      sink.emit(e);
    };

    std::vector<Value> vals(n);
    for (TimeStep t = 0; t < options.steps; ++t) {
      const SourceValues sources = workload(t, rank);
      auto run = [&](const DagNode& node) {
        std::vector<Value> ins;
        for (NodeId in : node.inputs) ins.push_back(vals[in]);
        OpContext ctx{ins, names[node.id], node.const_args};
        ctx.state = states[node.id].get();
        ctx.comm = specs[node.id]->is_global ? &comm : nullptr;
        ctx.env = node.kind == NodeKind::Action ? &env : nullptr;
        ctx.t = t;
        try {
          return specs[node.id]->eval(ctx);
        } catch (const Error& e) {
          throw e.annotated("node '" + node.name + "' at step " + std::to_string(t));
        }
      };
      for (NodeId id : dag.topo_order) {
        const DagNode& node = dag.nodes[id];
        if (node.kind == NodeKind::Action || node.kind == NodeKind::Trigger) continue;
        if (node.kind == NodeKind::Source) {
          if (node.name == "time") {
            vals[id] = Value::integer(t);
          } else {
            auto it = sources.find(node.name.substr(5));
            if (it == sources.end()) {
              throw Error(ErrorKind::SourceMissing, "no value for source '" + node.name + "'");
            }
            vals[id] = it->second;
          }
        } else {
          vals[id] = run(node);
          record(t, node, TraceEv::Evaluate, &vals[id]);
        }
        std::lock_guard lock(mu);
        result.values.emplace(std::make_tuple(t, rank, id), vals[id]);
      }
      for (const auto& trig : dag.triggers) {
        const bool fire = vals[trig.predicate].as_bool();
        for (NodeId a : trig.actions) {
          if (fire && options.run_actions) {
            run(dag.nodes[a]);
            ++result.fire_counts[rank][a];
            record(t, dag.nodes[a], TraceEv::ActionFire, nullptr);
          } else if (fire) {
            ++result.fire_counts[rank][a];
          } else {
            record(t, dag.nodes[a], TraceEv::ActionSkip, nullptr);
          }
        }
      }
    }
  });

  result.trace = sink.merged();
  return result;
}

}  // namespace diva
