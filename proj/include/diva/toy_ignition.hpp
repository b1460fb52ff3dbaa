#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "diva/eager.hpp"
#include "diva/lockstep.hpp"

namespace diva {

// Desk-scale stand-in for a reacting-flow solver: per-rank 3-D fields with
// bounded noise, plus an exponentially growing heat-release kernel on one
// rank.
struct ToyIgnitionConfig {
  std::array<std::size_t, 3> grid_per_rank{16, 16, 16};
  int ranks = 4;
  TimeStep steps = 220;
  int ignition_rank = 1;
  TimeStep ignition_step = 205;
  double baseline_hr = 1e-4;
  double hr_amplitude = 1.5e-3;  // kernel amplitude at ignition_step
  double hr_growth = 2.0;        // per-step exponential rate
  std::size_t kernel_size = 6;   // edge of the cubic kernel sub-block
  std::uint64_t noise_seed = 2024;

  void validate() const;  // ConfigError
};

inline const std::vector<std::string>& toy_field_names() {
  static const std::vector<std::string> names{"HeatRelease", "temperature", "Y1", "Y2", "Y3", "Y4"};
  return names;
}

SourceValues toy_sim_step(const ToyIgnitionConfig& config, TimeStep t, int rank);

Workload toy_workload(const ToyIgnitionConfig& config);

// Types of the toy fields, for compile-time checking of `data.*` uses.
CompileOptions toy_compile_options();

// Text of the bundled adaptive workflow.
const std::string& case_study_workflow();

struct RunOptions {
  int ranks = 1;
  TimeStep steps = 1;
  std::filesystem::path outdir = ".";
  bool eager = false;
  bool capture_trace = true;
  EngineOptions engine;
};

struct RunReport {
  std::shared_ptr<const Dag> dag;
  int ranks = 1;
  TimeStep steps = 0;
  // Scalar (bool/int/real/string) node values that became visible.
  std::map<std::tuple<TimeStep, int, std::string>, Value> scalars;
  std::vector<std::map<std::string, std::uint64_t>> fired;        // [rank] action -> count
  std::vector<std::map<std::string, std::uint64_t>> eval_counts;  // [rank] node -> evaluates
  std::vector<TraceEvent> trace;
  std::vector<std::string> printed;  // per rank

  // Steps where `node` was true on `rank` (only where it was evaluated).
  std::vector<TimeStep> true_steps(const std::string& node, int rank) const;
  // First step where `node` was true on any rank.
  std::optional<TimeStep> first_true(const std::string& node) const;
  nlohmann::json summary() const;
};

// Lazy (lock-step engines) or eager (oracle) execution of a compiled
// workflow; actions write below options.outdir.
RunReport run_workflow(std::shared_ptr<const Dag> dag, const OpRegistry& registry,
                       const Workload& workload, const RunOptions& options);

}  // namespace diva
