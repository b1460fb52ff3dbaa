// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "diva/builtins.hpp"
#include "diva/dag.hpp"
#include "diva/eager.hpp"
#include "diva/lockstep.hpp"
#include "diva/toy_ignition.hpp"
#include "support/oracles.hpp"
#include "support/random_workflow.hpp"

namespace fs = std::filesystem;
using namespace diva;

namespace {

struct Check {
  std::vector<std::string> problems;
  void expect(bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  }
};

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("diva_acceptance_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_events(const std::vector<TraceEvent>& trace, const std::string& node, TraceEv ev,
                         int rank = -1, TimeStep t = -1) {
  std::size_t n = 0;
  for (const auto& e : trace) {
    if (e.node == node && e.ev == ev && (rank < 0 || e.rank == rank) && (t < 0 || e.t == t)) ++n;
  }
  return n;
}

std::shared_ptr<const Dag> build(const std::string& src, const OpRegistry& reg,
                                 const CompileOptions& opts = toy_compile_options()) {
  return std::make_shared<const Dag>(compile_source(src, reg, opts));
}

// --- 1 ---------------------------------------------------------------------------

void language_conformance(Check& c) {
  const OpRegistry reg = make_builtin_registry();
  const std::string render = slurp(fs::path(DIVA_SOURCE_DIR) / "workflows/slice_render.diva");
  auto dag = build(render, reg);
  ToyIgnitionConfig cfg;
  cfg.ranks = 1;
  cfg.steps = 100;
  cfg.ignition_rank = 0;
  cfg.ignition_step = 99;
  RunOptions ro;
  ro.ranks = 1;
  ro.steps = 100;
  ro.outdir = scratch("render");
  auto rep = run_workflow(dag, reg, toy_workload(cfg), ro);
  std::size_t expected_fires = 0;
  for (int t = 0; t < 100; ++t) expected_fires += (t % 5 == 0) ? 1 : 0;
  std::uint64_t fired = 0;
  for (const auto& [_, n] : rep.fired[0]) fired += n;
  c.expect(fired == expected_fires, "render fired " + std::to_string(fired));
  for (const char* node : {"volume", "render"}) {
    const auto n = count_events(rep.trace, node, TraceEv::Evaluate);
    c.expect(n == expected_fires, std::string(node) + " evaluated " + std::to_string(n));
  }
  std::size_t images = 0;
  for (const auto& e : fs::directory_iterator(ro.outdir)) images += e.path().extension() == ".pgm";
  c.expect(images == expected_fires, "render wrote " + std::to_string(images) + " images");

  // The individual fragments of the adaptive workflow, then the assembled file.
  const std::vector<std::string> fragments = {
      "hr = max_array(data.HeatRelease)\n"
      "wait = (time > 200) && (time % 10 == 0)\n"
      "adhoc, valid = hr > 1E-3, wait && adhoc\n"
      "Trigger(valid) { print(hr) }\n",
      "features = list(data.HeatRelease, data.temperature)\n"
      "fmm = feature_moments(features)\n"
      "m1 = l2_rel_dist(fmm, reduce_avg(fmm))\n"
      "Trigger(m1 > 0.7) { print(m1) }\n",
      "stats = avg_list(list(data.HeatRelease, data.Y1))\n"
      "len = 40\n"
      "recorded = window(true, stats, len)\n"
      "Trigger(time == 30) { save_statistics(data = recorded, path = \"s.csv\") }\n",
      "valid = max_array(data.HeatRelease) > 1E-3\n"
      "anomaly = valid && time > 20\n"
      "pre_anomaly = switch(on = valid, off = anomaly)\n"
      "post_anomaly = countN(since = anomaly, n = 10)\n"
      "Trigger(post_anomaly) { print(time) }\n",
      case_study_workflow(),
  };
  cfg.ranks = 2;
  cfg.steps = 40;
  cfg.ignition_step = 30;
  ro.ranks = 2;
  ro.steps = 40;
  int i = 0;
  for (const auto& src : fragments) {
    ro.outdir = scratch("fragment" + std::to_string(i++));
    try {
      run_workflow(build(src, reg), reg, toy_workload(cfg), ro);
    } catch (const Error& e) {
      c.expect(false, "fragment " + std::to_string(i) + ": " + e.what());
    }
  }
}

// --- 2 ---------------------------------------------------------------------------

void lazy_eager(Check& c) {
  const OpRegistry reg = make_builtin_registry();
  std::size_t compared = 0;
  for (int i = 0; i < 200; ++i) {
    std::string text;
    auto dag = std::make_shared<const Dag>(randwf::random_dag(1000 + i, reg, &text));
    const int ranks = 1 + i % 4;
    try {
      auto eq = randwf::check_lazy_eager(dag, reg, randwf::workload(7 * i + 1), ranks, 50);
      compared += eq.compared;
      for (const auto& f : eq.failures) c.expect(false, "workflow " + std::to_string(i) + ": " + f);
    } catch (const Error& e) {
      c.expect(false, "workflow " + std::to_string(i) + " threw " + e.what() + "\n" + text);
    }
  }
  c.expect(compared > 10000, "only " + std::to_string(compared) + " values compared");
}

// --- 3 and 4: scripted single-rank runs ------------------------------------------

// Runs `src` on one rank over boolean sources c, d and int source a, and
// returns the per-step values of `node`.
std::vector<Value> run_scripted(const std::shared_ptr<const Dag>& dag, const OpRegistry& reg,
                                const std::string& node, const oracle::Trace& c,
                                const oracle::Trace& d, const std::vector<std::int64_t>& a) {
  const NodeId id = dag->node(node).id;
  Engine engine(dag, reg, Communicator::solo(dag->fingerprint()));
  std::vector<Value> out;
  for (std::size_t t = 0; t < c.size(); ++t) {
    SourceValues sv;
    sv["c"] = Value::boolean(c[t]);
    sv["d"] = Value::boolean(d[t]);
    sv["a"] = Value::integer(a[t]);
    engine.step(sv);
    out.push_back(*engine.value_of(id));
  }
  return out;
}

CompileOptions scripted_types() {
  CompileOptions o;
  o.source_types = {{"c", Type::Bool}, {"d", Type::Bool}, {"a", Type::Int}};
  return o;
}

oracle::Trace random_trace(std::mt19937_64& g, std::size_t n) {
  // Vary the density so that both sparse and saturated traces occur.
  const double p = std::uniform_real_distribution<double>(0.0, 1.0)(g);
  std::bernoulli_distribution b(p * p);
  oracle::Trace t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = b(g);
  return t;
}

void temporal_ops(Check& c) {
  const OpRegistry reg = make_builtin_registry();
  struct Case {
    std::string src;
    std::function<oracle::Trace(const oracle::Trace&, const oracle::Trace&)> model;
  };
  const std::vector<Case> cases = {
      {"y = until(data.c)", [](auto& x, auto&) { return oracle::until(x); }},
      {"y = after(data.c)", [](auto& x, auto&) { return oracle::after(x); }},
      {"y = first(data.c)", [](auto& x, auto&) { return oracle::first_n(x, 1); }},
      {"y = firstN(data.c, 3)", [](auto& x, auto&) { return oracle::first_n(x, 3); }},
      {"y = afterN(data.c, 4)", [](auto& x, auto&) { return oracle::after_n(x, 4); }},
      {"y = switch(on = data.c, off = data.d)",
       [](auto& x, auto& y) { return oracle::switch_on_off(x, y); }},
      {"y = countN(since = data.c, n = 10)", [](auto& x, auto&) { return oracle::count_n(x, 10); }},
  };
  std::mt19937_64 g(99);
  const std::vector<std::int64_t> zeros(200, 0);
  for (const auto& cs : cases) {
    auto dag = build(cs.src + "\n", reg, scripted_types());
    std::size_t bad = 0;
    for (int k = 0; k < 500; ++k) {
      const auto x = random_trace(g, 200);
      const auto y = random_trace(g, 200);
      const auto want = cs.model(x, y);
      const auto got = run_scripted(dag, reg, "y", x, y, zeros);
      for (std::size_t t = 0; t < want.size(); ++t) bad += got[t].as_bool() != want[t];
    }
    c.expect(bad == 0, cs.src + ": " + std::to_string(bad) + " mismatching steps");
  }
}

void window_semantics(Check& c) {
  const OpRegistry reg = make_builtin_registry();
  std::mt19937_64 g(4242);
  std::size_t bad = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t max_size = 1 + g() % 8;
    const std::size_t min_size = 1 + g() % max_size;
    const bool consecutive = (g() & 1) != 0;
    const std::string src = "y = window(data.c, data.a, " + std::to_string(max_size) + ", " +
                            std::to_string(min_size) + ", mode = \"" +
                            (consecutive ? "consecutive" : "sparse") + "\")\n";
    auto dag = build(src, reg, scripted_types());
    const auto cond = random_trace(g, 60);
    std::vector<std::int64_t> vals(60);
    for (auto& v : vals) v = static_cast<std::int64_t>(g() % 1000);
    const auto want = oracle::window(cond, vals, max_size, min_size, consecutive);
    const auto got = run_scripted(dag, reg, "y", cond, cond, vals);
    for (std::size_t t = 0; t < want.size(); ++t) {
      const ArrayData& a = got[t].as_array();
      bool same = a.items.size() == want[t].size();
      for (std::size_t i = 0; same && i < a.items.size(); ++i) {
        if (a.valid[i] != want[t][i].has_value()) {
          same = false;
        } else if (a.valid[i]) {
          same = a.items[i].as_int() == *want[t][i];
        }
      }
      bad += !same;
    }
  }
  c.expect(bad == 0, std::to_string(bad) + " mismatching window outputs");
}

// --- 5 ---------------------------------------------------------------------------

void global_unison(Check& c) {
  const OpRegistry reg = make_builtin_registry();
  CompileOptions types;
  types.source_types = {{"x", Type::Real}, {"fire", Type::Bool}};
  auto dag = build("g = reduce_avg(data.x)\nTrigger(data.fire) { print(g) }\n", reg, types);
  const TimeStep fire_step = 3;
  const int fire_rank = 2;
  Workload wl = [&](TimeStep t, int r) {
    SourceValues v;
    v["x"] = Value::real(r);
    v["fire"] = Value::boolean(t == fire_step && r == fire_rank);
    return v;
  };
  LockstepOptions lo;
  lo.ranks = 4;
  lo.steps = 8;
  auto res = run_lockstep(dag, reg, wl, lo);
  for (TimeStep t = 0; t < lo.steps; ++t) {
    std::set<int> ranks;
    for (const auto& e : res.trace) {
      if (e.t == t && e.node == "g" && e.ev == TraceEv::Evaluate) ranks.insert(e.rank);
    }
    const std::size_t want = t == fire_step ? 4 : 0;
    c.expect(ranks.size() == want, "step " + std::to_string(t) + ": g evaluated on " +
                                       std::to_string(ranks.size()) + " ranks");
  }
  c.expect(res.ranks[fire_rank].printed == "1.5\n", "printed '" + res.ranks[fire_rank].printed + "'");

  // Control: no demand sync. Steps before the firing step run cleanly.
  lo.engine.demand_sync = false;
  lo.steps = fire_step;
  try {
    run_lockstep(dag, reg, wl, lo);
  } catch (const Error& e) {
    c.expect(false, std::string("control failed early: ") + e.what());
  }
  lo.steps = fire_step + 1;
  bool desync = false;
  try {
    run_lockstep(dag, reg, wl, lo);
  } catch (const Error& e) {
    desync = e.kind() == ErrorKind::Desync;
    if (!desync) c.expect(false, std::string("control threw ") + e.what());
  }
  c.expect(desync, "control engine did not desync at the firing step");
}

// --- 6 ---------------------------------------------------------------------------

void impure_eagerness(Check& c) {
  const OpRegistry reg = make_builtin_registry();
  auto dag = build("n = count()\nTrigger(time == 99) { print(n) }\n", reg);
  LockstepOptions lo;
  lo.ranks = 2;
  lo.steps = 100;
  auto res = run_lockstep(dag, reg, [](TimeStep, int) { return SourceValues{}; }, lo);
  for (int r = 0; r < 2; ++r) {
    c.expect(res.ranks[r].printed == "100\n", "rank " + std::to_string(r) + " printed '" +
                                                  res.ranks[r].printed + "'");
    const auto n = count_events(res.trace, "n", TraceEv::Evaluate, r);
    c.expect(n == 100, "count evaluated " + std::to_string(n) + " times");
  }
}

// --- 7 ---------------------------------------------------------------------------

void short_circuit(Check& c) {
  const OpRegistry reg = make_builtin_registry();
  const std::string prefilter =
      "hr = max_array(data.HeatRelease)\n"
      "wait = (time > 200) && (time % 10 == 0)\n"
      "adhoc, valid = hr > 1E-3, wait && adhoc\n"
      "Trigger(valid) { print(hr) }\n";
  ToyIgnitionConfig cfg;
  cfg.steps = 300;
  LockstepOptions lo;
  lo.ranks = 4;
  lo.steps = 300;
  lo.capture_trace = false;
  auto dag = build(prefilter, reg);
  auto res = run_lockstep(dag, reg, toy_workload(cfg), lo);
  std::uint64_t want = 0;
  for (TimeStep t = 0; t < 300; ++t) want += (t > 200 && t % 10 == 0) ? 1 : 0;
  const NodeId hr = dag->node("hr").id;
  for (int r = 0; r < 4; ++r) {
    const auto got = res.ranks[r].counts[hr].evaluate;
    c.expect(got == want, "rank " + std::to_string(r) + ": max_array evaluated " +
                              std::to_string(got) + ", expected " + std::to_string(want));
  }

  // Global right operand behind a rank-dependent gate.
  CompileOptions types = toy_compile_options();
  types.source_types["gate"] = Type::Bool;
  auto gdag = build(
      "hr = max_array(data.HeatRelease)\n"
      "valid = data.gate && (reduce_max(hr) > 1E-3)\n"
      "Trigger(valid) { print(time) }\n",
      reg, types);
  auto gate = [](TimeStep t, int r) { return (t + 3 * r) % 17 == 0; };
  Workload wl = [&, base = toy_workload(cfg)](TimeStep t, int r) {
    auto v = base(t, r);
    v["gate"] = Value::boolean(gate(t, r));
    return v;
  };
  auto gres = run_lockstep(gdag, reg, wl, lo);
  std::uint64_t demand = 0;
  for (TimeStep t = 0; t < 300; ++t) {
    bool any = false;
    for (int r = 0; r < 4; ++r) any = any || gate(t, r);
    demand += any;
  }
  const NodeId red = gdag->node("valid#2").id;  // reduce_max(hr)
  c.expect(gdag->nodes[red].op == "reduce_max", "unexpected node layout");
  for (int r = 0; r < 4; ++r) {
    const auto& counts = gres.ranks[r].counts;
    c.expect(counts[red].evaluate == demand && counts[gdag->node("hr").id].evaluate == demand,
             "rank " + std::to_string(r) + ": global rhs evaluated " +
                 std::to_string(counts[red].evaluate) + ", expected " + std::to_string(demand));
  }
}

// --- 8 ---------------------------------------------------------------------------

void case_study(Check& c) {
  const OpRegistry reg = make_builtin_registry();
  const ToyIgnitionConfig cfg;
  auto dag = build(slurp(fs::path(DIVA_SOURCE_DIR) / "workflows/case_study.diva"), reg);
  RunOptions ro;
  ro.ranks = cfg.ranks;
  ro.steps = cfg.steps;
  ro.outdir = scratch("case_a");
  auto rep = run_workflow(dag, reg, toy_workload(cfg), ro);

  std::vector<std::pair<int, TimeStep>> anomalies;
  for (int r = 0; r < cfg.ranks; ++r) {
    for (TimeStep t : rep.true_steps("anomaly", r)) anomalies.emplace_back(r, t);
  }
  c.expect(anomalies.size() == 1, "anomaly fired " + std::to_string(anomalies.size()) + " times");
  if (anomalies.size() != 1) return;
  const auto [rank, at] = anomalies.front();
  c.expect(std::abs(at - cfg.ignition_step) <= 10, "anomaly far from the scripted ignition");

  for (int r = 0; r < cfg.ranks; ++r) {
    const auto valid = rep.true_steps("valid", r);
    std::vector<TimeStep> pre_want, post_want;
    if (!valid.empty() && r == rank) {
      for (TimeStep t = valid.front(); t <= at - 1; ++t) pre_want.push_back(t);
    }
    if (r == rank) {
      for (TimeStep t = at; t <= at + 9 && t < cfg.steps; ++t) post_want.push_back(t);
    }
    c.expect(rep.true_steps("pre_anomaly", r) == pre_want,
             "pre_anomaly interval wrong on rank " + std::to_string(r));
    c.expect(rep.true_steps("post_anomaly", r) == post_want,
             "post_anomaly interval wrong on rank " + std::to_string(r));
    for (const auto& [name, n] : rep.fired[r]) {
      if (dag->node(name).op == "save_statistics") {
        c.expect(n == (r == rank ? 1u : 0u), "save_statistics fired " + std::to_string(n) + " times");
      }
    }
  }

  const fs::path rank_dir = ro.outdir / ("rank" + std::to_string(rank));
  for (const char* stat : {"avg", "min", "max"}) {
    const fs::path p = rank_dir / ("stats_" + std::string(stat) + "_t" + std::to_string(at) + ".csv");
    std::ifstream in(p);
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) ++rows;
    }
    c.expect(rows == 40, p.filename().string() + " has " + std::to_string(rows) + " rows");
  }

  // Determinism: a second run produces byte-identical files.
  write_trace(ro.outdir / "run.trace.jsonl", rep.trace);
  RunOptions ro2 = ro;
  ro2.outdir = scratch("case_b");
  auto rep2 = run_workflow(dag, reg, toy_workload(cfg), ro2);
  write_trace(ro2.outdir / "run.trace.jsonl", rep2.trace);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(ro.outdir)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path other = ro2.outdir / fs::relative(e.path(), ro.outdir);
    c.expect(fs::exists(other) && slurp(e.path()) == slurp(other),
             "output differs between runs: " + other.string());
  }
  c.expect(files >= 14, "only " + std::to_string(files) + " output files");
}

// --- 9 ---------------------------------------------------------------------------

struct CliResult {
  int code;
  std::string err;
};

CliResult run_cli(const std::string& args) {
  const fs::path err = scratch("cli") / "stderr.txt";
  const std::string cmd = std::string(DIVA_CLI) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

// Position of the `nth` occurrence of `needle` in `src` as "line:col".
std::string position_of(const std::string& src, const std::string& needle) {
  const std::size_t at = src.find(needle);
  int line = 1, col = 1;
  for (std::size_t i = 0; i < at; ++i) {
    if (src[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

void diagnostics(Check& c) {
  const OpRegistry reg = make_builtin_registry();
  DagBuilder b(reg);
  const NodeId x = b.add_source("data.x");
  const NodeId p = b.add_op("p", "add", {x, x});
  const NodeId q = b.add_op("q", "mul", {p, x});
  const NodeId r = b.add_op("r", "sub", {q, x});
  b.set_inputs(p, {x, r});
  try {
    (void)b.build();
    c.expect(false, "builder cycle accepted");
  } catch (const Error& e) {
    std::set<std::string> names(e.names().begin(), e.names().end());
    c.expect(e.kind() == ErrorKind::Cycle && names == std::set<std::string>{"p", "q", "r"},
             std::string("cycle error: ") + e.what());
  }

  const fs::path dir = scratch("diag");
  struct Bad {
    std::string name, src, anchor;
  };
  const std::vector<Bad> bad = {
      {"pred.diva", "hr = max_array(data.HeatRelease)\nTrigger(hr) { print(hr) }\n", "Trigger"},
      {"unknown.diva", "x = 1\ny = frobnicate(x)\n", "frobnicate"},
      {"undef.diva", "a = 1\nb = a + c\nc = 2\n", "c\n"},
  };
  for (const auto& t : bad) {
    const fs::path f = dir / t.name;
    std::ofstream(f) << t.src;
    const auto res = run_cli("check " + f.string());
    const std::string want = f.string() + ":" + position_of(t.src, t.anchor) + ":";
    c.expect(res.code == 2, t.name + ": exit " + std::to_string(res.code));
    c.expect(res.err.rfind(want, 0) == 0, t.name + ": diagnostic '" + res.err + "' lacks " + want);
  }
  const fs::path good = fs::path(DIVA_SOURCE_DIR) / "workflows/slice_render.diva";
  c.expect(run_cli("check " + good.string()).code == 0, "check on slice_render failed");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double limit_s;
    void (*fn)(Check&);
  };
  const Criterion criteria[] = {
      {1, "language conformance (render workflow fires 20x, fragments run)", 5, language_conformance},
      {2, "lazy/eager equivalence on 200 random workflows", 60, lazy_eager},
      {3, "temporal operators match replay oracles", 10, temporal_ops},
      {4, "window matches brute-force history replay", 10, window_semantics},
      {5, "global unison and desync control", 5, global_unison},
      {6, "impure eagerness of count()", 5, impure_eagerness},
      {7, "short-circuit pre-filter counts", 10, short_circuit},
      {8, "case study end-to-end", 30, case_study},
      {9, "compiler diagnostics and exit codes", 10, diagnostics},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.fn(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("uncaught: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > cr.limit_s) {
      c.expect(false, "took " + std::to_string(secs) + " s (limit " +
                          std::to_string(cr.limit_s) + " s)");
    }
    const bool ok = c.problems.empty();
    failed += !ok;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2fs", secs);
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << cr.id << ": " << cr.title << " ("
              << buf << ")\n";
    for (const auto& p : c.problems) std::cout << "    " << p << '\n';
  }
  fs::remove_all(fs::temp_directory_path() / ("diva_acceptance_" + std::to_string(::getpid())));
  return failed == 0 ? 0 : 1;
}
