#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "diva/value.hpp"

namespace diva {

enum class TraceEv { Evaluate, CacheHit, Skip, ActionFire, ActionSkip, GlobalSync };

const char* to_string(TraceEv ev);
TraceEv parse_trace_ev(const std::string& s);

struct TraceEvent {
  TimeStep t = 0;
  int rank = 0;
  std::string node;
  TraceEv ev = TraceEv::Evaluate;
  std::optional<Value> value;  // set on evaluate/cache_hit when values are recorded
  std::string v_text;          // compact trace encoding of value ("" if none)
  std::uint64_t epoch = 0;     // communicator epoch at emission (merge key only)
  std::uint64_t seq = 0;       // per-rank emission counter (merge key only)
};

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void emit(const TraceEvent& e) = 0;
  virtual void end_step(int rank, TimeStep t) {
    (void)rank;
    (void)t;
  }
};

// Thread-safe in-memory collector.
class MemorySink : public TraceSink {
 public:
  void emit(const TraceEvent& e) override;
  std::vector<TraceEvent> events() const;
  // Sorted by (t, epoch, rank, seq).
  std::vector<TraceEvent> merged() const;

 private:
  mutable std::mutex mu_;
  std::vector<TraceEvent> events_;
};

// Writes one JSON object per line and flushes at each step boundary.
class JsonlSink : public TraceSink {
 public:
  explicit JsonlSink(std::ostream& out) : out_(out) {}
  void emit(const TraceEvent& e) override;
  void end_step(int rank, TimeStep t) override;

 private:
  std::mutex mu_;
  std::ostream& out_;
};

void sort_merged(std::vector<TraceEvent>& events);

// {"t":..,"rank":..,"node":..,"ev":..[,"v":..]}
std::string trace_line(const TraceEvent& e);
TraceEvent parse_trace_line(const std::string& line);
void write_trace(const std::filesystem::path& path, const std::vector<TraceEvent>& events);
std::vector<TraceEvent> read_trace(const std::filesystem::path& path);

struct TraceDiff {
  std::size_t compared = 0;
  std::vector<std::string> mismatches;  // human-readable, capped
  std::size_t mismatch_count = 0;
};

// Compares recorded values of evaluate/cache_hit events on (t, rank, node)
// keys present in both traces.
TraceDiff diff_traces(const std::vector<TraceEvent>& a, const std::vector<TraceEvent>& b);

}  // namespace diva
