#include "diva/trace.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <tuple>

#include "diva/value_json.hpp"

namespace diva {

using nlohmann::json;

const char* to_string(TraceEv ev) {
  switch (ev) {
    case TraceEv::Evaluate: return "evaluate";
    case TraceEv::CacheHit: return "cache_hit";
    case TraceEv::Skip: return "skip";
    case TraceEv::ActionFire: return "action_fire";
    case TraceEv::ActionSkip: return "action_skip";
    case TraceEv::GlobalSync: return "global_sync";
  }
  return "?";
}

TraceEv parse_trace_ev(const std::string& s) {
  for (TraceEv ev : {TraceEv::Evaluate, TraceEv::CacheHit, TraceEv::Skip, TraceEv::ActionFire,
                     TraceEv::ActionSkip, TraceEv::GlobalSync}) {
    if (s == to_string(ev)) return ev;
  }
  throw Error(ErrorKind::InvalidValue, "unknown trace event '" + s + "'");
}

void MemorySink::emit(const TraceEvent& e) {
  std::lock_guard lock(mu_);
  events_.push_back(e);
}

std::vector<TraceEvent> MemorySink::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::vector<TraceEvent> MemorySink::merged() const {
  auto out = events();
  sort_merged(out);
  return out;
}

void sort_merged(std::vector<TraceEvent>& events) {
  std::stable_sort(events.begin(), events.end(), [](const TraceEvent& a, const TraceEvent& b) {
    return std::tie(a.t, a.epoch, a.rank, a.seq) < std::tie(b.t, b.epoch, b.rank, b.seq);
  });
}

void JsonlSink::emit(const TraceEvent& e) {
  std::lock_guard lock(mu_);
  out_ << trace_line(e) << '\n';
}

void JsonlSink::end_step(int, TimeStep) {
  std::lock_guard lock(mu_);
  out_.flush();
}

std::string trace_line(const TraceEvent& e) {
  json j;
  j["t"] = e.t;
  j["rank"] = e.rank;
  j["node"] = e.node;
  j["ev"] = to_string(e.ev);
  if (!e.v_text.empty()) {
    j["v"] = json::parse(e.v_text);
  } else if (e.value) {
    j["v"] = value_to_trace_json(*e.value);
  }
  return j.dump();
}

TraceEvent parse_trace_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::InvalidValue, std::string("malformed trace line: ") + ex.what());
  }
  TraceEvent e;
  try {
    e.t = j.at("t").get<TimeStep>();
    e.rank = j.at("rank").get<int>();
    e.node = j.at("node").get<std::string>();
    e.ev = parse_trace_ev(j.at("ev").get<std::string>());
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::InvalidValue, std::string("malformed trace line: ") + ex.what());
  }
  if (j.contains("v")) e.v_text = j["v"].dump();
  return e;
}

void write_trace(const std::filesystem::path& path, const std::vector<TraceEvent>& events) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write trace '" + path.string() + "'");
  for (const auto& e : events) out << trace_line(e) << '\n';
  if (!out) throw Error(ErrorKind::Io, "write to '" + path.string() + "' failed");
}

std::vector<TraceEvent> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read trace '" + path.string() + "'");
  std::vector<TraceEvent> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_trace_line(line));
  }
  return out;
}

namespace {

std::string value_text(const TraceEvent& e) {
  if (!e.v_text.empty()) return e.v_text;
  if (e.value) return value_to_trace_json(*e.value).dump();
  return {};
}

}  // namespace

TraceDiff diff_traces(const std::vector<TraceEvent>& a, const std::vector<TraceEvent>& b) {
  using Key = std::tuple<TimeStep, int, std::string>;
  auto index = [](const std::vector<TraceEvent>& evs) {
    std::map<Key, std::string> m;
    for (const auto& e : evs) {
      if (e.ev != TraceEv::Evaluate && e.ev != TraceEv::CacheHit) continue;
      auto v = value_text(e);
      if (!v.empty()) m[{e.t, e.rank, e.node}] = std::move(v);
    }
    return m;
  };
  const auto ma = index(a);
  const auto mb = index(b);
  TraceDiff d;
  for (const auto& [key, va] : ma) {
    auto it = mb.find(key);
    if (it == mb.end()) continue;
    ++d.compared;
    if (va != it->second) {
      ++d.mismatch_count;
      if (d.mismatches.size() < 20) {
        d.mismatches.push_back("t=" + std::to_string(std::get<0>(key)) + " rank=" +
                               std::to_string(std::get<1>(key)) + " node=" + std::get<2>(key) +
                               ": " + va + " vs " + it->second);
      }
    }
  }
  return d;
}

}  // namespace diva
