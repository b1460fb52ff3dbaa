// Random well-typed workflows over sources a:int, b:real, c:bool, and a
// lazy-versus-eager comparison harness shared by unit and acceptance tests.
#pragma once

#include <algorithm>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "diva/builtins.hpp"
#include "diva/dag.hpp"
#include "diva/eager.hpp"
#include "diva/lockstep.hpp"

namespace randwf {

enum class T { Int, Real, Bool };

struct Sig {
  std::string name;
  T type;
  int depth;
};

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  std::string workflow(int statements) {
    sigs_ = {{"data.a", T::Int, 0}, {"data.b", T::Real, 0}, {"data.c", T::Bool, 0},
             {"time", T::Int, 0}};
    std::ostringstream out;
    for (int i = 0; i < statements; ++i) {
      const T type = static_cast<T>(pick(3));
      const std::string name = "s" + std::to_string(i);
      int depth = 0;
      out << name << " = " << expr(type, depth) << '\n';
      sigs_.push_back({name, type, depth});
    }
    const int triggers = 1 + pick(2);
    for (int i = 0; i < triggers; ++i) {
      int d = 0;
      out << "Trigger(" << ref(T::Bool, d) << ") {\n";
      int d2 = 0;
      switch (pick(3)) {
        case 0: out << "  print(" << ref(T::Int, d2) << ", " << ref(T::Real, d2) << ")\n"; break;
        case 1: out << "  print(reduce_avg(" << ref(T::Real, d2) << "))\n"; break;
        default: out << "  print(" << ref(T::Bool, d2) << ", reduce_sum(" << ref(T::Int, d2) << "))\n";
      }
      out << "}\n";
    }
    return out.str();
  }

 private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  // A previously defined signal of `type` shallow enough to extend.
  std::string ref(T type, int& depth) {
    std::vector<const Sig*> pool;
    for (const auto& s : sigs_) {
      if (s.type == type && s.depth <= 3) pool.push_back(&s);
    }
    const Sig* s = pool[pick(static_cast<int>(pool.size()))];
    depth = std::max(depth, s->depth);
    return s->name;
  }

  std::string expr(T type, int& depth) {
    int d = 0;
    std::string e;
    switch (type) {
      case T::Int:
        switch (pick(8)) {
          case 0: e = ref(T::Int, d) + " + " + ref(T::Int, d); break;
          case 1: e = ref(T::Int, d) + " - " + ref(T::Int, d); break;
          case 2: e = ref(T::Int, d) + " * " + ref(T::Int, d); break;
          case 3: e = ref(T::Int, d) + " % 7"; break;
          case 4: e = "count()"; break;
          case 5: e = "reduce_sum(" + ref(T::Int, d) + ")"; break;
          case 6: e = "at(window(true, " + ref(T::Int, d) + ", 3), 0)"; break;
          default: e = "-" + ref(T::Int, d); break;
        }
        break;
      case T::Real:
        switch (pick(5)) {
          case 0: e = ref(T::Real, d) + " + " + ref(T::Real, d); break;
          case 1: e = ref(T::Real, d) + " * 0.5"; break;
          case 2: e = ref(T::Int, d) + " + " + ref(T::Real, d); break;
          case 3: e = "reduce_avg(" + ref(T::Real, d) + ")"; break;
          default: e = "max_array(window(true, " + ref(T::Real, d) + ", 4, 2))";
        }
        break;
      case T::Bool:
        switch (pick(14)) {
          case 0: e = ref(T::Int, d) + " > " + ref(T::Int, d); break;
          case 1: e = ref(T::Real, d) + " <= " + ref(T::Real, d); break;
          case 2: e = ref(T::Bool, d) + " && " + ref(T::Bool, d); break;
          case 3: e = ref(T::Bool, d) + " || " + ref(T::Bool, d); break;
          case 4: e = "!" + ref(T::Bool, d); break;
          case 5: e = "until(" + ref(T::Bool, d) + ")"; break;
          case 6: e = "after(" + ref(T::Bool, d) + ")"; break;
          case 7: e = "firstN(" + ref(T::Bool, d) + ", 2)"; break;
          case 8: e = "afterN(" + ref(T::Bool, d) + ", 2)"; break;
          case 9: e = "switch(" + ref(T::Bool, d) + ", " + ref(T::Bool, d) + ")"; break;
          case 10: e = "countN(" + ref(T::Bool, d) + ", 3)"; break;
          case 11: e = ref(T::Bool, d) + " && (reduce_max(" + ref(T::Int, d) + ") > 0)"; break;
          case 12: e = ref(T::Bool, d) + " || (reduce_min(" + ref(T::Real, d) + ") < 0.5)"; break;
          default: e = ref(T::Int, d) + " == " + ref(T::Int, d); break;
        }
        break;
    }
    depth = d + 2;
    return e;
  }

  std::mt19937_64 rng_;
  std::vector<Sig> sigs_;
};

inline diva::CompileOptions source_types() {
  diva::CompileOptions o;
  o.source_types = {{"a", diva::Type::Int}, {"b", diva::Type::Real}, {"c", diva::Type::Bool}};
  return o;
}

inline diva::Workload workload(std::uint64_t seed) {
  return [seed](diva::TimeStep t, int rank) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(t),
                      static_cast<std::uint32_t>(rank)};
    std::mt19937_64 g(seq);
    diva::SourceValues v;
    v["a"] = diva::Value::integer(static_cast<std::int64_t>(g() % 11) - 5);
    v["b"] = diva::Value::real(static_cast<double>(g() >> 11) * 0x1.0p-53);
    v["c"] = diva::Value::boolean((g() & 1) != 0);
    return v;
  };
}

// Longest chain of value edges (actions and triggers excluded).
inline int dag_depth(const diva::Dag& dag) {
  std::vector<int> depth(dag.nodes.size(), 0);
  int best = 0;
  for (diva::NodeId id : dag.topo_order) {
    const auto& n = dag.nodes[id];
    if (n.kind == diva::NodeKind::Action || n.kind == diva::NodeKind::Trigger) continue;
    for (diva::NodeId in : n.inputs) depth[id] = std::max(depth[id], depth[in] + 1);
    best = std::max(best, depth[id]);
  }
  return best;
}

// A random workflow that compiles to at most `max_nodes` nodes and depth 6.
inline diva::Dag random_dag(std::uint64_t seed, const diva::OpRegistry& registry,
                            std::string* text = nullptr, std::size_t max_nodes = 25) {
  std::mt19937_64 meta(seed);
  for (int attempt = 0;; ++attempt) {
    Generator gen(meta());
    const int statements = 2 + static_cast<int>(meta() % 6);
    std::string src = gen.workflow(statements);
    diva::Dag dag = diva::compile_source(src, registry, source_types());
    if (dag.nodes.size() <= max_nodes && dag_depth(dag) <= 6) {
      if (text) *text = src;
      return dag;
    }
  }
}

struct Equivalence {
  std::size_t compared = 0;
  std::vector<std::string> failures;
};

// Runs the lazy engines and the eager oracle; every value the lazy engines
// expose must equal the oracle's, plus the trace-level invariants.
inline Equivalence check_lazy_eager(const std::shared_ptr<const diva::Dag>& dag,
                                    const diva::OpRegistry& registry,
                                    const diva::Workload& wl, int ranks, diva::TimeStep steps) {
  using Key = std::tuple<diva::TimeStep, int, diva::NodeId>;
  std::map<Key, diva::Value> lazy;
  diva::LockstepOptions lo;
  lo.ranks = ranks;
  lo.steps = steps;
  lo.on_value = [&](int r, diva::TimeStep t, diva::NodeId id, const diva::Value& v) {
    lazy.emplace(Key{t, r, id}, v);
  };
  auto res = diva::run_lockstep(dag, registry, wl, lo);
  diva::EagerOptions eo;
  eo.ranks = ranks;
  eo.steps = steps;
  auto eager = diva::run_eager_oracle(*dag, registry, wl, eo);

  Equivalence out;
  auto fail = [&](const std::string& m) {
    if (out.failures.size() < 10) out.failures.push_back(m);
  };
  for (const auto& [key, v] : lazy) {
    auto it = eager.values.find(key);
    const auto& [t, r, id] = key;
    const std::string where = "t=" + std::to_string(t) + " rank=" + std::to_string(r) + " node=" +
                              dag->nodes[id].name;
    if (it == eager.values.end()) {
      fail("oracle has no value at " + where);
    } else if (!diva::value_identical(v, it->second)) {
      fail("lazy " + diva::to_display(v) + " != eager " + diva::to_display(it->second) + " at " +
           where);
    }
    ++out.compared;
  }

  // Trace invariants.
  std::map<std::tuple<diva::TimeStep, std::string, int>, int> evals;
  std::map<std::pair<diva::TimeStep, std::string>, std::set<int>> global_ranks;
  std::map<std::string, diva::NodeId> by_name;
  for (const auto& n : dag->nodes) by_name[n.name] = n.id;
  for (const auto& e : res.trace) {
    if (e.ev != diva::TraceEv::Evaluate) continue;
    if (++evals[{e.t, e.node, e.rank}] > 1) fail("double evaluate of " + e.node);
    auto it = by_name.find(e.node);
    if (it != by_name.end() && dag->nodes[it->second].is_global) {
      global_ranks[{e.t, e.node}].insert(e.rank);
    }
  }
  for (const auto& [key, rs] : global_ranks) {
    if (static_cast<int>(rs.size()) != ranks) fail("global node " + key.second + " not in unison");
  }
  for (const auto& n : dag->nodes) {
    if (!n.is_impure) continue;
    for (int r = 0; r < ranks; ++r) {
      if (res.ranks[r].counts[n.id].evaluate != static_cast<std::uint64_t>(steps)) {
        fail("impure node " + n.name + " not evaluated every step");
      }
    }
  }
  // Fired actions must have a true predicate (per the oracle) on that rank.
  for (int r = 0; r < ranks; ++r) {
    for (diva::TimeStep t = 0; t < steps; ++t) {
      for (diva::NodeId a : res.ranks[r].fired[t]) {
        for (const auto& trig : dag->triggers) {
          if (std::find(trig.actions.begin(), trig.actions.end(), a) == trig.actions.end()) continue;
          if (!eager.values.at(Key{t, r, trig.predicate}).as_bool()) fail("action fired on false");
        }
      }
    }
  }
  return out;
}

}  // namespace randwf
