#include "diva/toy_ignition.hpp"

#include <cmath>
#include <random>

namespace diva {

void ToyIgnitionConfig::validate() const {
  auto bad = [](const std::string& why) { throw Error(ErrorKind::Config, why); };
  if (ranks < 1) bad("ranks must be >= 1");
  if (steps < 1) bad("steps must be >= 1");
  if (ignition_rank < 0 || ignition_rank >= ranks) {
    bad("ignition_rank " + std::to_string(ignition_rank) + " outside [0, " +
        std::to_string(ranks) + ")");
  }
  if (ignition_step < 0 || ignition_step >= steps) bad("ignition_step must lie in [0, steps)");
  for (std::size_t d : grid_per_rank) {
    if (d < 2) bad("grid extents must be >= 2");
  }
  for (std::size_t d : grid_per_rank) {
    if (kernel_size > d) bad("kernel larger than the grid");
  }
  if (kernel_size < 1) bad("kernel_size must be >= 1");
  if (!(baseline_hr > 0) || !(hr_amplitude > 0)) bad("heat-release scales must be positive");
}

namespace {

// Uniform doubles in [-1, 1) from a 64-bit engine, independent of the
// standard library's distribution implementations.
struct Noise {
  std::mt19937_64 gen;
  Noise(std::uint64_t seed, TimeStep t, int rank, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(rank),
                      static_cast<std::uint32_t>(stream)};
    gen.seed(seq);
  }
  double next() { return static_cast<double>(gen() >> 11) * 0x1.0p-52 - 1.0; }
};

}  // namespace

SourceValues toy_sim_step(const ToyIgnitionConfig& c, TimeStep t, int rank) {
  c.validate();
  if (t < 0 || t >= c.steps) {
    throw Error(ErrorKind::Config, "step " + std::to_string(t) + " outside the configured run");
  }
  const auto dims = c.grid_per_rank;
  const std::size_t n = dims[0] * dims[1] * dims[2];
  SourceValues out;

  struct Spec {
    const char* name;
    double base;
    double spread;
  };
  const Spec specs[] = {{"HeatRelease", c.baseline_hr, 0.5 * c.baseline_hr},
                        {"temperature", 1.0, 0.05},
                        {"Y1", 0.2, 0.01},
                        {"Y2", 0.2, 0.01},
                        {"Y3", 0.2, 0.01},
                        {"Y4", 0.2, 0.01}};
  std::uint64_t stream = 0;
  for (const Spec& s : specs) {
    Noise noise(c.noise_seed, t, rank, stream++);
    std::vector<double> data(n);
    for (double& x : data) x = s.base + s.spread * noise.next();
    if (stream == 1 && rank == c.ignition_rank) {
      // Kernel centred in the block.
      const double amp =
          c.hr_amplitude * std::exp(c.hr_growth * static_cast<double>(t - c.ignition_step));
      std::size_t lo[3];
      for (int a = 0; a < 3; ++a) lo[a] = (dims[a] - c.kernel_size) / 2;
      for (std::size_t i = lo[0]; i < lo[0] + c.kernel_size; ++i) {
        for (std::size_t j = lo[1]; j < lo[1] + c.kernel_size; ++j) {
          for (std::size_t k = lo[2]; k < lo[2] + c.kernel_size; ++k) {
            data[(i * dims[1] + j) * dims[2] + k] += amp;
          }
        }
      }
    }
    out.emplace(s.name, Value::field(dims, std::move(data)));
  }
  return out;
}

Workload toy_workload(const ToyIgnitionConfig& config) {
  config.validate();
  return [config](TimeStep t, int rank) { return toy_sim_step(config, t, rank); };
}

CompileOptions toy_compile_options() {
  CompileOptions o;
  for (const auto& name : toy_field_names()) o.source_types[name] = Type::Field;
  return o;
}

const std::string& case_study_workflow() {
  static const std::string text = R"(// Adaptive ignition workflow: cheap pre-filters guard the anomaly metric,
// statistics are kept in a short-term memory and dumped on detection, and
// slices are rendered for a while afterwards.

hr = max_array(data.HeatRelease)
wait = (time > 200) && (time % 10 == 0)
adhoc, valid = hr > 1E-3, wait && adhoc

features = list(data.HeatRelease, data.temperature, data.Y1, data.Y2, data.Y3, data.Y4)
fmm = feature_moments(features)
m1 = l2_rel_dist(fmm, reduce_avg(fmm))
fmm_win = window(true, fmm, 2)
m2 = l2_rel_dist(fmm, at(fmm_win, 0))
anomaly = valid && (m1 > 0.7 || m2 > 0.7)

stats_ftr_avg = avg_list(features)
stats_ftr_min = min_list(features)
stats_ftr_max = max_list(features)
len = 40
recorded_avg = window(true, stats_ftr_avg, len)
recorded_min = window(true, stats_ftr_min, len)
recorded_max = window(true, stats_ftr_max, len)

Trigger(anomaly) {
  save_statistics(data = recorded_avg, path = "stats_avg_t" + str(time) + ".csv")
  save_statistics(data = recorded_min, path = "stats_min_t" + str(time) + ".csv")
  save_statistics(data = recorded_max, path = "stats_max_t" + str(time) + ".csv")
}

pre_anomaly = switch(on = valid, off = anomaly)
post_anomaly = countN(since = anomaly, n = 10)

vol = slice_image(data.HeatRelease, 2, 8)
Trigger(post_anomaly) {
  save_pgm(vol, "slice_t" + str(time) + ".pgm")
}
)";
  return text;
}

// --- generic runner ---------------------------------------------------------------

std::vector<TimeStep> RunReport::true_steps(const std::string& node, int rank) const {
  std::vector<TimeStep> out;
  for (const auto& [key, v] : scalars) {
    const auto& [t, r, name] = key;
    if (r == rank && name == node && v.type() == Type::Bool && v.as_bool()) out.push_back(t);
  }
  return out;
}

std::optional<TimeStep> RunReport::first_true(const std::string& node) const {
  std::optional<TimeStep> best;
  for (int r = 0; r < ranks; ++r) {
    auto steps = true_steps(node, r);
    if (!steps.empty() && (!best || steps.front() < *best)) best = steps.front();
  }
  return best;
}

nlohmann::json RunReport::summary() const {
  nlohmann::json j;
  if (dag && dag->find("anomaly")) {
    auto a = first_true("anomaly");
    j["anomaly_step"] = a ? nlohmann::json(*a) : nlohmann::json(nullptr);
  } else {
    j["anomaly_step"] = nullptr;
  }
  j["ranks"] = ranks;
  j["steps"] = steps;
  j["fired_actions"] = nlohmann::json::array();
  j["eval_counts"] = nlohmann::json::array();
  for (int r = 0; r < ranks; ++r) {
    j["fired_actions"].push_back(fired[r]);
    j["eval_counts"].push_back(eval_counts[r]);
  }
  return j;
}

namespace {

bool is_scalar(const Value& v) {
  const Type t = v.type();
  return t == Type::Bool || t == Type::Int || t == Type::Real || t == Type::Str;
}

}  // namespace

RunReport run_workflow(std::shared_ptr<const Dag> dag, const OpRegistry& registry,
                       const Workload& workload, const RunOptions& options) {
  RunReport report;
  report.dag = dag;
  report.ranks = options.ranks;
  report.steps = options.steps;
  report.fired.resize(options.ranks);
  report.eval_counts.resize(options.ranks);
  std::error_code ec;
  std::filesystem::create_directories(options.outdir, ec);

  if (options.eager) {
    EagerOptions eo;
    eo.ranks = options.ranks;
    eo.steps = options.steps;
    eo.run_actions = true;
    eo.outdir = options.outdir;
    eo.capture_trace = options.capture_trace;
    auto res = run_eager_oracle(*dag, registry, workload, eo);
    for (const auto& [key, v] : res.values) {
      const auto& [t, r, id] = key;
      if (is_scalar(v)) report.scalars.emplace(std::make_tuple(t, r, dag->nodes[id].name), v);
      ++report.eval_counts[r][dag->nodes[id].name];
    }
    for (int r = 0; r < options.ranks; ++r) {
      for (const auto& node : dag->nodes) {
        if (node.kind == NodeKind::Action) report.fired[r][node.name] = res.fire_counts[r][node.id];
      }
    }
    report.trace = std::move(res.trace);
    report.printed.resize(options.ranks);
    return report;
  }

  LockstepOptions lo;
  lo.ranks = options.ranks;
  lo.steps = options.steps;
  lo.engine = options.engine;
  lo.outdir = options.outdir;
  lo.capture_trace = options.capture_trace;
  lo.on_value = [&](int rank, TimeStep t, NodeId id, const Value& v) {
    if (is_scalar(v)) report.scalars[std::make_tuple(t, rank, dag->nodes[id].name)] = v;
  };
  auto res = run_lockstep(dag, registry, workload, lo);
  for (int r = 0; r < options.ranks; ++r) {
    const auto& counts = res.ranks[r].counts;
    for (const auto& node : dag->nodes) {
      if (node.kind == NodeKind::Action) {
        report.fired[r][node.name] = counts[node.id].fire;
      } else if (node.kind != NodeKind::Source && node.kind != NodeKind::Trigger) {
        report.eval_counts[r][node.name] = counts[node.id].evaluate;
      }
    }
    report.printed.push_back(res.ranks[r].printed);
  }
  report.trace = std::move(res.trace);
  return report;
}

}  // namespace diva
