#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "diva/comm.hpp"
#include "diva/engine.hpp"

namespace diva {

// Per-rank simulation outputs for step t. Called concurrently from rank
// workers, so it must not share mutable state across calls.
using Workload = std::function<SourceValues(TimeStep t, int rank)>;

using RankValueHook = std::function<void(int rank, TimeStep t, NodeId id, const Value& v)>;

struct LockstepOptions {
  int ranks = 1;
  TimeStep steps = 1;
  EngineOptions engine;
  std::filesystem::path outdir = ".";
  bool capture_trace = true;
  // Invoked under a lock; need not be thread-safe itself.
  RankValueHook on_value;
};

struct RankResult {
  std::vector<std::vector<NodeId>> fired;  // per step
  std::vector<NodeCounts> counts;          // per node id
  std::string printed;                     // output of `print` actions
};

struct LockstepResult {
  std::vector<RankResult> ranks;
  std::vector<TraceEvent> trace;  // merged, ordered (t, epoch, rank)
  std::vector<CollectiveRecord> collectives;
  std::vector<std::uint64_t> final_epochs;  // per rank
};

// One engine per rank on its own worker; ranks meet only inside collectives.
// Rethrows the first failure (DesyncError or an engine error tagged with
// its rank) after every worker has stopped.
LockstepResult run_lockstep(std::shared_ptr<const Dag> dag, const OpRegistry& registry,
                            const Workload& workload, const LockstepOptions& options);

// Runs one worker per rank, aborting the group on the first failure.
void run_ranks(const std::shared_ptr<CommGroup>& group,
               const std::function<void(int rank)>& body);

}  // namespace diva
