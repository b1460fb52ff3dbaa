#include "diva/lockstep.hpp"

#include <mutex>
#include <sstream>
#include <thread>

namespace diva {

void run_ranks(const std::shared_ptr<CommGroup>& group,
               const std::function<void(int rank)>& body) {
  const int n = group->size();
  std::vector<std::optional<Error>> errors(static_cast<std::size_t>(n));
  std::vector<std::thread> workers;
  for (int r = 0; r < n; ++r) {
    workers.emplace_back([&, r] {
      try {
        body(r);
      } catch (const Error& e) {
        Error tagged = e.kind() == ErrorKind::Desync ? e : e.annotated("rank " + std::to_string(r));
        errors[r] = tagged;
        group->abort(tagged);
      } catch (const std::exception& e) {
        Error tagged(ErrorKind::Runtime, "rank " + std::to_string(r) + ": " + e.what());
        errors[r] = tagged;
        group->abort(tagged);
      }
      group->finish(r);
    });
  }
  for (auto& w : workers) w.join();
  if (auto reason = group->abort_reason()) throw *reason;
  for (auto& e : errors) {
    if (e) throw *e;
  }
}

LockstepResult run_lockstep(std::shared_ptr<const Dag> dag, const OpRegistry& registry,
                            const Workload& workload, const LockstepOptions& options) {
  if (options.ranks < 1) throw Error(ErrorKind::Config, "ranks must be >= 1");
  if (options.steps < 1) throw Error(ErrorKind::Config, "steps must be >= 1");
  auto group = std::make_shared<CommGroup>(options.ranks);
  const std::uint64_t fp = dag->fingerprint();
  MemorySink sink;
  std::mutex hook_mu;
  LockstepResult result;
  result.ranks.resize(static_cast<std::size_t>(options.ranks));
  result.final_epochs.resize(static_cast<std::size_t>(options.ranks));

  run_ranks(group, [&](int r) {
    std::ostringstream printed;
    ActionEnv env;
    env.outdir = options.outdir;
    env.out = &printed;
    Engine engine(dag, registry, Communicator(group, r, fp), env,
                  options.capture_trace ? &sink : nullptr, options.engine);
    if (options.on_value) {
      engine.on_value([&, r](TimeStep t, NodeId id, const Value& v) {
        std::lock_guard lock(hook_mu);
        options.on_value(r, t, id, v);
      });
    }
    RankResult& out = result.ranks[r];
    for (TimeStep i = 0; i < options.steps; ++i) {
      const TimeStep t = options.engine.start_step + i;
      out.fired.push_back(engine.step(workload(t, r)));
    }
    for (NodeId id = 0; id < dag->nodes.size(); ++id) out.counts.push_back(engine.counts(id));
    out.printed = printed.str();
    result.final_epochs[r] = engine.comm().epoch();
  });

  result.trace = sink.merged();
  result.collectives = group->records();
  return result;
}

}  // namespace diva
