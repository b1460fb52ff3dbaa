#pragma once

#include <map>
#include <tuple>

#include "diva/lockstep.hpp"

namespace diva {

// (t, rank, node) -> value
using OracleValues = std::map<std::tuple<TimeStep, int, NodeId>, Value>;

struct EagerOptions {
  int ranks = 1;
  TimeStep steps = 1;
  // Fire actions whose predicate holds (CLI --eager); off for pure oracle use.
  bool run_actions = false;
  std::filesystem::path outdir = ".";
  bool capture_trace = false;
};

struct EagerResult {
  OracleValues values;
  std::vector<TraceEvent> trace;
  std::vector<std::vector<std::uint64_t>> fire_counts;  // [rank][node]
};

// Reference semantics: every non-action node on every rank at every step, in
// topological order, with no caching and no short-circuit. Both sides of
// && / || are evaluated and collectives run unconditionally.
EagerResult run_eager_oracle(const Dag& dag, const OpRegistry& registry, const Workload& workload,
                             const EagerOptions& options);

}  // namespace diva
