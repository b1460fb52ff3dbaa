// diva — command-line front end: check, graph, run, trace-diff.
//
// Exit codes: 0 success, 2 workflow diagnostics (lex/parse/compile errors),
// 1 anything else (usage, I/O, runtime failures, trace differences).

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "diva/builtins.hpp"
#include "diva/dag.hpp"
#include "diva/parser.hpp"
#include "diva/toy_ignition.hpp"
#include "diva/trace.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kDiagnostics = 2;

bool is_diagnostic(diva::ErrorKind k) {
  using diva::ErrorKind;
  switch (k) {
    case ErrorKind::Lex:
    case ErrorKind::Parse:
    case ErrorKind::UnknownOperator:
    case ErrorKind::UndefinedName:
    case ErrorKind::DuplicateName:
    case ErrorKind::Cycle:
    case ErrorKind::Type:
    case ErrorKind::Arity:
    case ErrorKind::Config:
      return true;
    default:
      return false;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw diva::Error(diva::ErrorKind::Io, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Compiles `file`, printing a positioned diagnostic on failure.
std::shared_ptr<const diva::Dag> load(const std::string& file, const diva::OpRegistry& registry) {
  const std::string src = read_file(file);
  return std::make_shared<const diva::Dag>(
      diva::compile_source(src, registry, diva::toy_compile_options()));
}

int report(const diva::Error& e, const std::string& file) {
  std::cerr << e.diagnostic(file) << '\n';
  return is_diagnostic(e.kind()) ? kDiagnostics : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diva: reactive in-situ workflow compiler and runtime"};
  app.require_subcommand(1);

  std::string file;
  auto* check = app.add_subcommand("check", "parse and compile a workflow");
  check->add_option("file", file, "workflow (.diva)")->required();

  std::string dot_out;
  auto* graph = app.add_subcommand("graph", "print the compiled DAG as Graphviz DOT");
  graph->add_option("file", file, "workflow (.diva)")->required();
  graph->add_option("--dot", dot_out, "write DOT here instead of stdout");

  int ranks = 1;
  long steps = 1;
  std::string sim = "toy-ignition";
  std::string outdir = "out";
  std::string trace_path;
  std::uint64_t seed = diva::ToyIgnitionConfig{}.noise_seed;
  bool eager = false;
  int reload_every = 0;
  auto* run = app.add_subcommand("run", "execute a workflow against a simulation");
  run->add_option("file", file, "workflow (.diva)")->required();
  run->add_option("--ranks", ranks, "simulated ranks")->check(CLI::PositiveNumber);
  run->add_option("--steps", steps, "timesteps")->check(CLI::PositiveNumber);
  run->add_option("--sim", sim, "simulation")->check(CLI::IsMember({"toy-ignition"}));
  run->add_option("--outdir", outdir, "output directory");
  run->add_option("--trace", trace_path, "trace file (default <outdir>/run.trace.jsonl)");
  run->add_option("--seed", seed, "noise seed");
  run->add_flag("--eager", eager, "run the eager reference evaluator instead");
  run->add_option("--reload-every", reload_every, "reload operators every N steps")
      ->check(CLI::NonNegativeNumber);

  std::string trace_a, trace_b;
  auto* tdiff = app.add_subcommand("trace-diff", "compare node values of two traces");
  tdiff->add_option("a", trace_a)->required();
  tdiff->add_option("b", trace_b)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kFailure;
  }

  const diva::OpRegistry registry = diva::make_builtin_registry();
  try {
    if (*check) {
      auto dag = load(file, registry);
      std::cout << file << ": ok (" << dag->nodes.size() << " nodes, " << dag->triggers.size()
                << " triggers)\n";
      return kOk;
    }
    if (*graph) {
      auto dag = load(file, registry);
      const std::string dot = diva::export_dot(*dag);
      if (dot_out.empty()) {
        std::cout << dot;
      } else {
        std::ofstream out(dot_out);
        out << dot;
        if (!out) throw diva::Error(diva::ErrorKind::Io, "cannot write '" + dot_out + "'");
      }
      return kOk;
    }
    if (*run) {
      auto dag = load(file, registry);
      diva::ToyIgnitionConfig cfg;
      cfg.ranks = ranks;
      cfg.steps = steps;
      cfg.noise_seed = seed;
      if (cfg.ignition_rank >= ranks) cfg.ignition_rank = ranks - 1;
      if (cfg.ignition_step >= steps) cfg.ignition_step = steps - 1;
      diva::RunOptions opts;
      opts.ranks = ranks;
      opts.steps = steps;
      opts.outdir = outdir;
      opts.eager = eager;
      opts.engine.reload_every = reload_every;
      auto rep = diva::run_workflow(dag, registry, diva::toy_workload(cfg), opts);
      const std::filesystem::path tp =
          trace_path.empty() ? std::filesystem::path(outdir) / "run.trace.jsonl" : std::filesystem::path(trace_path);
      diva::write_trace(tp, rep.trace);
      std::ofstream summary(std::filesystem::path(outdir) / "summary.json");
      summary << rep.summary().dump(2) << '\n';
      if (!summary) throw diva::Error(diva::ErrorKind::Io, "cannot write summary.json");
      for (const auto& p : rep.printed) std::cout << p;
      return kOk;
    }
    if (*tdiff) {
      const auto d = diva::diff_traces(diva::read_trace(trace_a), diva::read_trace(trace_b));
      for (const auto& m : d.mismatches) std::cout << m << '\n';
      std::cout << d.compared << " values compared, " << d.mismatch_count << " differ\n";
      return d.mismatch_count == 0 ? kOk : kFailure;
    }
  } catch (const diva::Error& e) {
    return report(e, file);
  } catch (const std::exception& e) {
    std::cerr << "diva: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
