#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "diva/registry.hpp"

namespace diva {

// Registry preloaded with every standard operator.
OpRegistry make_builtin_registry();
void register_builtins(OpRegistry& registry);

enum class WindowMode { Sparse, Consecutive };

WindowMode parse_window_mode(const std::string& s);  // ConfigError on unknown

// History buffer behind `window`. Output is oldest-first, padded with invalid
// slots up to min_size.
class WindowState : public OpState {
 public:
  WindowState(std::int64_t max_size, std::int64_t min_size, WindowMode mode);

  Value update(bool condition, const Value& x);
  Value output() const;

  std::size_t occupancy() const { return buf_.size(); }
  std::uint64_t pushes() const { return pushes_; }
  std::uint64_t evictions() const { return evictions_; }
  std::uint64_t cleared() const { return cleared_; }

 private:
  std::size_t max_size_;
  std::size_t min_size_;
  WindowMode mode_;
  std::deque<Value> buf_;
  std::uint64_t pushes_ = 0;
  std::uint64_t evictions_ = 0;
  std::uint64_t cleared_ = 0;
};

// Boolean latches over one step of input each.
struct UntilState : OpState {
  bool seen = false;
  bool step(bool x);
};

struct AfterState : OpState {
  bool seen = false;
  bool step(bool x);
};

struct FirstNState : OpState {
  explicit FirstNState(std::int64_t n) : n(n) {}
  std::int64_t n;
  std::int64_t fired = 0;
  bool step(bool x);
};

struct AfterNState : OpState {
  explicit AfterNState(std::int64_t n) : n(n) {}
  std::int64_t n;
  std::int64_t seen = 0;
  bool step(bool x);
};

struct SwitchState : OpState {
  bool on = false;
  bool step(bool turn_on, bool turn_off);
};

struct CountNState : OpState {
  explicit CountNState(std::int64_t n) : n(n) {}
  std::int64_t n;
  std::int64_t remaining = 0;
  bool step(bool since);
};

struct CountState : OpState {
  std::int64_t count = 0;
};

// [mean, population variance, skewness, kurtosis]; skew/kurt are 0 when the
// variance is 0. Throws EmptyInput below two values.
std::vector<double> moments(const std::vector<double>& xs);

// ||a - b|| / (||b|| + 1e-12)
double l2_rel_dist(const std::vector<double>& a, const std::vector<double>& b);

// Row-major 2-D slice; the sliced axis has extent 1 in the result.
Value slice_image(const FieldData& f, int axis, std::int64_t index);

// Numeric payload of a real, int, field or array-of-numbers (invalid slots
// skipped). Used by the statistics ops.
std::vector<double> numeric_values(const Value& v);

}  // namespace diva
