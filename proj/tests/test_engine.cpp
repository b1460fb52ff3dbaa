#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "diva/builtins.hpp"
#include "diva/eager.hpp"
#include "diva/engine.hpp"
#include "diva/lockstep.hpp"
#include "diva/toy_ignition.hpp"
#include "support/random_workflow.hpp"

using namespace diva;
namespace fs = std::filesystem;

namespace {

const OpRegistry& reg() {
  static const OpRegistry r = make_builtin_registry();
  return r;
}

std::shared_ptr<const Dag> dag_of(const std::string& src, std::map<std::string, Type> types = {}) {
  CompileOptions o;
  o.source_types = std::move(types);
  return std::make_shared<const Dag>(compile_source(src, reg(), o));
}

std::size_t count_ev(const std::vector<TraceEvent>& tr, const std::string& node, TraceEv ev) {
  return static_cast<std::size_t>(std::count_if(tr.begin(), tr.end(), [&](const TraceEvent& e) {
    return e.node == node && e.ev == ev;
  }));
}

}  // namespace

TEST(Engine, SliceRenderFiresEveryFifthStep) {
  std::ifstream in(fs::path(DIVA_SOURCE_DIR) / "workflows/slice_render.diva");
  std::stringstream ss;
  ss << in.rdbuf();
  auto dag = std::make_shared<const Dag>(compile_source(ss.str(), reg(), toy_compile_options()));
  ToyIgnitionConfig cfg;
  cfg.grid_per_rank = {8, 8, 8};
  cfg.ranks = 1;
  cfg.steps = 100;
  cfg.ignition_rank = 0;
  cfg.ignition_step = 50;
  MemorySink sink;
  ActionEnv env;
  env.outdir = fs::temp_directory_path() / ("diva_engine_render_" + std::to_string(::getpid()));
  fs::remove_all(env.outdir);
  Engine e(dag, reg(), Communicator::solo(), env, &sink);
  const auto wl = toy_workload(cfg);
  std::size_t fired = 0;
  for (int t = 0; t < 100; ++t) fired += e.step(wl(t, 0)).size();
  EXPECT_EQ(fired, 20u);
  EXPECT_EQ(e.counts("render").evaluate, 20u);
  EXPECT_EQ(e.counts("volume").evaluate, 20u);
  EXPECT_EQ(count_ev(sink.events(), "render", TraceEv::Evaluate), 20u);
  EXPECT_TRUE(fs::exists(env.outdir / "img-95.pgm"));
}

TEST(Engine, ConstantChainsHitTheCache) {
  auto dag = dag_of("a = 1\nb = a + 1\nTrigger(true) { print(b) }\n");
  std::ostringstream out;
  ActionEnv env;
  env.out = &out;
  Engine e(dag, reg(), Communicator::solo(), env);
  for (int t = 0; t < 10; ++t) e.step({});
  EXPECT_EQ(e.counts("b").evaluate, 1u);
  EXPECT_EQ(e.counts("b").cache_hit, 9u);
  EXPECT_EQ(out.str().size(), 20u);
}

TEST(Engine, DiamondRecomputesOnlyOnInputChange) {
  auto dag = dag_of(
      "x = data.v * 2\nl = x + 1\nr = x - 1\nd = l * r\nTrigger(true) { print(d) }\n",
      {{"v", Type::Int}});
  std::ostringstream out;
  ActionEnv env;
  env.out = &out;
  Engine e(dag, reg(), Communicator::solo(), env);
  const std::vector<int> vs = {1, 1, 2, 2, 2, 3, 1, 1};
  std::size_t changes = 0;
  for (std::size_t t = 0; t < vs.size(); ++t) {
    changes += (t == 0 || vs[t] != vs[t - 1]);
    e.step({{"v", Value::integer(vs[t])}});
  }
  for (const char* n : {"x", "l", "r", "d"}) {
    EXPECT_EQ(e.counts(n).evaluate, changes) << n;
    EXPECT_EQ(e.counts(n).evaluate + e.counts(n).cache_hit, vs.size()) << n;
  }
  EXPECT_EQ(out.str(), "3\n3\n15\n15\n15\n35\n3\n3\n");
}

TEST(Engine, UnchangedValueDoesNotInvalidateConsumers) {
  auto dag = dag_of("p = data.v % 2\nq = p * 10\nTrigger(true) { print(q) }\n", {{"v", Type::Int}});
  std::ostringstream out;
  ActionEnv env;
  env.out = &out;
  Engine e(dag, reg(), Communicator::solo(), env);
  for (int v : {1, 3, 5, 2, 4}) e.step({{"v", Value::integer(v)}});
  EXPECT_EQ(e.counts("p").evaluate, 5u);
  EXPECT_EQ(e.counts("q").evaluate, 2u);
}

TEST(Engine, ShortCircuitSkipsRightOperand) {
  auto dag = dag_of(
      "cheap = time % 4 == 0\nheavy = max_array(data.f) > 0.5\nok = cheap && heavy\n"
      "Trigger(ok) { print(time) }\n",
      {{"f", Type::Field}});
  MemorySink sink;
  std::ostringstream out;
  ActionEnv env;
  env.out = &out;
  Engine e(dag, reg(), Communicator::solo(), env, &sink);
  for (int t = 0; t < 20; ++t) {
    e.step({{"f", Value::field({1, 1, 2}, {0.0, t % 8 == 0 ? 1.0 : 0.0})}});
  }
  EXPECT_EQ(e.counts("heavy").evaluate + e.counts("heavy").cache_hit, 5u);
  EXPECT_EQ(e.counts("heavy").skip, 15u);
  EXPECT_EQ(count_ev(sink.events(), "heavy", TraceEv::Skip), 15u);
  EXPECT_EQ(out.str(), "0\n8\n16\n");
}

TEST(Engine, OrShortCircuitsOnTrue) {
  auto dag = dag_of("y = time < 3 || max_array(data.f) > 0\nTrigger(y) { print(time) }\n",
                    {{"f", Type::Field}});
  Engine e(dag, reg(), Communicator::solo());
  for (int t = 0; t < 5; ++t) e.step({{"f", Value::field({1, 1, 1}, {1.0})}});
  EXPECT_EQ(e.counts("y#4").evaluate + e.counts("y#4").cache_hit, 2u);
}

TEST(Engine, GlobalRightOperandEvaluatedInUnison) {
  auto dag = dag_of("g = data.c && (reduce_sum(data.x) > 0)\nTrigger(g) { print(time) }\n",
                    {{"c", Type::Bool}, {"x", Type::Int}});
  auto gate = [](TimeStep t, int r) { return t % 5 == r; };
  Workload wl = [&](TimeStep t, int r) {
    return SourceValues{{"c", Value::boolean(gate(t, r))}, {"x", Value::integer(1)}};
  };
  LockstepOptions lo;
  lo.ranks = 4;
  lo.steps = 20;
  auto res = run_lockstep(dag, reg(), wl, lo);
  // Pre-order naming: g#1 is the comparison, g#2 the reduction.
  ASSERT_EQ(dag->node("g#1").op, "gt");
  ASSERT_EQ(dag->node("g#2").op, "reduce_sum");
  std::uint64_t want = 0;
  for (TimeStep t = 0; t < 20; ++t) want += (t % 5) < 4;
  for (int r = 0; r < 4; ++r) {
    EXPECT_EQ(res.ranks[r].counts[dag->node("g#2").id].evaluate, want) << r;
  }
  std::map<TimeStep, std::set<int>> who;
  for (const auto& e : res.trace)
    if (e.node == "g#2" && e.ev == TraceEv::Evaluate) who[e.t].insert(e.rank);
  for (const auto& [t, rs] : who) EXPECT_EQ(rs.size(), 4u) << t;
}

TEST(Engine, DemandSyncPullsGlobalsOnEveryRank) {
  auto dag = dag_of("g = reduce_avg(data.x)\nTrigger(data.fire) { print(g) }\n",
                    {{"x", Type::Real}, {"fire", Type::Bool}});
  Workload wl = [](TimeStep t, int r) {
    return SourceValues{{"x", Value::real(r)}, {"fire", Value::boolean(t == 2 && r == 0)}};
  };
  LockstepOptions lo;
  lo.ranks = 3;
  lo.steps = 5;
  auto res = run_lockstep(dag, reg(), wl, lo);
  EXPECT_EQ(res.ranks[0].printed, "1.0\n");
  for (int r = 0; r < 3; ++r) EXPECT_EQ(res.ranks[r].counts[dag->node("g").id].evaluate, 1u);
  lo.engine.demand_sync = false;
  try {
    run_lockstep(dag, reg(), wl, lo);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Desync);
  }
}

TEST(Engine, ImpureNodesRunEveryStep) {
  auto dag = dag_of("n = count()\nu = until(n > 50)\nTrigger(time == 99) { print(n) }\n");
  std::ostringstream out;
  ActionEnv env;
  env.out = &out;
  Engine e(dag, reg(), Communicator::solo(), env);
  for (int t = 0; t < 100; ++t) e.step({});
  EXPECT_EQ(out.str(), "100\n");
  EXPECT_EQ(e.counts("n").evaluate, 100u);
  EXPECT_EQ(e.counts("u").evaluate, 100u);
}

TEST(Engine, MissingSourceIsReported) {
  auto dag = dag_of("y = data.q + 1\n", {{"q", Type::Int}});
  Engine e(dag, reg(), Communicator::solo());
  try {
    e.step({});
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::SourceMissing);
  }
}

TEST(Engine, ReloadPicksUpOverridesAndKeepsState) {
  OpRegistry r = make_builtin_registry();
  auto dag = std::make_shared<const Dag>(
      compile_source("n = count()\nm = -n\nTrigger(true) { print(m) }\n", r));
  std::ostringstream out;
  ActionEnv env;
  env.out = &out;
  Engine e(dag, r, Communicator::solo(), env);
  e.step({});
  e.step({});
  OpSpec neg = *r.find("neg");
  neg.eval = [](OpContext& c) { return Value::integer(c.inputs[0].as_int() * 100); };
  r.override_op(neg);
  e.step({});  // still the old implementation
  e.request_reload();
  e.step({});
  EXPECT_EQ(out.str(), "-1\n-2\n-3\n400\n");
}

TEST(Engine, PeriodicReload) {
  OpRegistry r = make_builtin_registry();
  auto dag = std::make_shared<const Dag>(compile_source("m = -time\nTrigger(true) { print(m) }\n", r));
  EngineOptions opts;
  opts.reload_every = 3;
  std::ostringstream out;
  ActionEnv env;
  env.out = &out;
  Engine e(dag, r, Communicator::solo(), env, nullptr, opts);
  e.step({});
  OpSpec neg = *r.find("neg");
  neg.eval = [](OpContext&) { return Value::integer(7); };
  r.override_op(neg);
  e.step({});
  e.step({});
  e.step({});
  EXPECT_EQ(out.str(), "0\n-1\n-2\n7\n");
}

TEST(Engine, LazyMatchesEagerOnRandomWorkflows) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    std::string text;
    auto dag = std::make_shared<const Dag>(randwf::random_dag(seed * 31 + 7, reg(), &text));
    const auto eq = randwf::check_lazy_eager(dag, reg(), randwf::workload(seed), 1 + seed % 3, 30);
    EXPECT_TRUE(eq.failures.empty()) << text << "\n" << (eq.failures.empty() ? "" : eq.failures[0]);
    EXPECT_GT(eq.compared, 0u);
  }
}

TEST(Trace, JsonlRoundTripAndDiff) {
  auto dag = dag_of("x = time * 2\ny = x > 4\nTrigger(y) { print(x) }\n");
  LockstepOptions lo;
  lo.ranks = 2;
  lo.steps = 6;
  auto res = run_lockstep(dag, reg(), [](TimeStep, int) { return SourceValues{}; }, lo);
  const fs::path p = fs::temp_directory_path() / ("diva_trace_rt_" + std::to_string(::getpid()) + ".jsonl");
  write_trace(p, res.trace);
  const auto back = read_trace(p);
  ASSERT_EQ(back.size(), res.trace.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(trace_line(back[i]), trace_line(res.trace[i]));
  }
  const auto same = diff_traces(res.trace, back);
  EXPECT_EQ(same.mismatch_count, 0u);
  EXPECT_GT(same.compared, 0u);

  auto eager = run_eager_oracle(*dag, reg(), [](TimeStep, int) { return SourceValues{}; },
                                EagerOptions{2, 6, false, ".", true});
  EXPECT_EQ(diff_traces(res.trace, eager.trace).mismatch_count, 0u);

  auto tampered = back;
  for (auto& e : tampered) {
    if (e.node == "x" && e.ev == TraceEv::Evaluate) {
      e.value = Value::integer(-1);
      e.v_text.clear();
      break;
    }
  }
  EXPECT_EQ(diff_traces(res.trace, tampered).mismatch_count, 1u);
}

TEST(Trace, MergedOrderIsByStepThenEpochThenRank) {
  auto dag = dag_of("g = reduce_sum(time)\nTrigger(true) { print(g) }\n");
  LockstepOptions lo;
  lo.ranks = 3;
  lo.steps = 4;
  auto res = run_lockstep(dag, reg(), [](TimeStep, int) { return SourceValues{}; }, lo);
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    const auto& a = res.trace[i - 1];
    const auto& b = res.trace[i];
    EXPECT_LE(std::tie(a.t, a.epoch, a.rank, a.seq), std::tie(b.t, b.epoch, b.rank, b.seq));
  }
  EXPECT_EQ(res.final_epochs, std::vector<std::uint64_t>(3, res.final_epochs[0]));
}
