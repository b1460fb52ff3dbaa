#include "diva/builtins.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>

namespace diva {

// --- standalone state machines -------------------------------------------------

WindowMode parse_window_mode(const std::string& s) {
  if (s == "sparse") return WindowMode::Sparse;
  if (s == "consecutive") return WindowMode::Consecutive;
  throw Error(ErrorKind::Config, "unknown window mode '" + s + "' (sparse|consecutive)");
}

WindowState::WindowState(std::int64_t max_size, std::int64_t min_size, WindowMode mode)
    : mode_(mode) {
  if (max_size < 1 || min_size < 1) {
    throw Error(ErrorKind::Config, "window sizes must be positive");
  }
  if (min_size > max_size) {
    throw Error(ErrorKind::Config, "window min_size " + std::to_string(min_size) +
                                       " exceeds max_size " + std::to_string(max_size));
  }
  max_size_ = static_cast<std::size_t>(max_size);
  min_size_ = static_cast<std::size_t>(min_size);
}

Value WindowState::update(bool condition, const Value& x) {
  if (condition) {
    if (buf_.size() == max_size_) {
      buf_.pop_front();
      ++evictions_;
    }
    buf_.push_back(x);
    ++pushes_;
  } else if (mode_ == WindowMode::Consecutive) {
    cleared_ += buf_.size();
    buf_.clear();
  }
  return output();
}

Value WindowState::output() const {
  const std::size_t n = std::max(buf_.size(), min_size_);
  std::vector<Value> items(buf_.begin(), buf_.end());
  std::vector<bool> valid(buf_.size(), true);
  items.resize(n);
  valid.resize(n, false);
  return Value::array(std::move(items), std::move(valid));
}

bool UntilState::step(bool x) {
  seen = seen || x;
  return !seen;
}

bool AfterState::step(bool x) {
  seen = seen || x;
  return seen;
}

bool FirstNState::step(bool x) {
  if (!x || fired >= n) return false;
  ++fired;
  return true;
}

bool AfterNState::step(bool x) {
  if (x && seen < n) ++seen;
  return seen >= n;
}

bool SwitchState::step(bool turn_on, bool turn_off) {
  on = (on || turn_on) && !turn_off;
  return on;
}

bool CountNState::step(bool since) {
  if (since) remaining = n;
  const bool out = remaining > 0;
  if (remaining > 0) --remaining;
  return out;
}

// --- numeric helpers -------------------------------------------------------------

namespace {

void collect_numeric(const Value& v, std::vector<double>& out) {
  switch (v.type()) {
    case Type::Int:
    case Type::Real: out.push_back(v.as_real()); break;
    case Type::Field: {
      const auto& d = v.as_field().data;
      out.insert(out.end(), d.begin(), d.end());
      break;
    }
    case Type::Array: {
      const ArrayData& a = v.as_array();
      for (std::size_t i = 0; i < a.items.size(); ++i) {
        if (a.valid[i]) collect_numeric(a.items[i], out);
      }
      break;
    }
    default:
      throw Error(ErrorKind::TypeMismatch,
                  std::string("numeric data required, got ") + to_string(v.type()));
  }
}

}  // namespace

std::vector<double> numeric_values(const Value& v) {
  std::vector<double> out;
  collect_numeric(v, out);
  return out;
}

std::vector<double> moments(const std::vector<double>& xs) {
  if (xs.size() < 2) {
    throw Error(ErrorKind::EmptyInput, "moments need at least 2 values, got " +
                                           std::to_string(xs.size()));
  }
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 == 0.0) return {mean, 0.0, 0.0, 0.0};
  return {mean, m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2)};
}

double l2_rel_dist(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::InvalidValue, "l2_rel_dist length mismatch: " +
                                             std::to_string(a.size()) + " vs " +
                                             std::to_string(b.size()));
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / (std::sqrt(den) + 1e-12);
}

Value slice_image(const FieldData& f, int axis, std::int64_t index) {
  if (axis < 0 || axis > 2) {
    throw Error(ErrorKind::Config, "slice axis must be 0, 1 or 2, got " + std::to_string(axis));
  }
  if (index < 0 || static_cast<std::size_t>(index) >= f.dims[axis]) {
    throw Error(ErrorKind::IndexOutOfRange, "slice index " + std::to_string(index) +
                                                " outside [0, " + std::to_string(f.dims[axis]) +
                                                ") on axis " + std::to_string(axis));
  }
  auto dims = f.dims;
  dims[axis] = 1;
  std::vector<double> out;
  out.reserve(dims[0] * dims[1] * dims[2]);
  const auto k = static_cast<std::size_t>(index);
  for (std::size_t i = 0; i < dims[0]; ++i) {
    for (std::size_t j = 0; j < dims[1]; ++j) {
      for (std::size_t l = 0; l < dims[2]; ++l) {
        std::size_t c[3] = {i, j, l};
        c[axis] = k;
        out.push_back(f.data[f.index(c[0], c[1], c[2])]);
      }
    }
  }
  return Value::field(dims, std::move(out));
}

// --- registration ----------------------------------------------------------------

namespace {

Param sig(std::string name, TypeSet accepts = TypeSet::any()) {
  Param p;
  p.name = std::move(name);
  p.accepts = accepts;
  return p;
}

Param variadic(std::string name, TypeSet accepts = TypeSet::any()) {
  Param p = sig(std::move(name), accepts);
  p.variadic = true;
  return p;
}

Param constant(std::string name, TypeSet accepts, std::optional<Value> def = std::nullopt,
               bool optional = false) {
  Param p = sig(std::move(name), accepts);
  p.is_const = true;
  p.default_value = std::move(def);
  p.optional = optional;
  return p;
}

bool is_num(Type t) { return t == Type::Int || t == Type::Real; }

// Result type of arithmetic: Int only when both sides are statically Int.
Type arith_type(std::span<const Type> ts) {
  bool any = false, real = false;
  for (Type t : ts) {
    if (t == Type::Any) any = true;
    if (t == Type::Real) real = true;
  }
  if (real) return Type::Real;
  if (any) return Type::Any;
  return Type::Int;
}

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

template <class IntFn, class RealFn>
OpEval arith(IntFn fi, RealFn fr) {
  return [fi, fr](OpContext& c) {
    auto [a, b] = promote_numeric(c.inputs[0], c.inputs[1]);
    if (a.type() == Type::Int) return Value::integer(fi(a.as_int(), b.as_int()));
    return Value::real(fr(a.as_real(), b.as_real()));
  };
}

template <class Cmp>
OpEval compare(Cmp cmp) {
  return [cmp](OpContext& c) {
    const Value& a = c.inputs[0];
    const Value& b = c.inputs[1];
    if (a.type() == Type::Str && b.type() == Type::Str) {
      const int r = a.as_str().compare(b.as_str());
      return Value::boolean(cmp(r, 0));
    }
    auto [x, y] = promote_numeric(a, b);
    if (x.type() == Type::Int) return Value::boolean(cmp(x.as_int(), y.as_int()));
    return Value::boolean(cmp(x.as_real(), y.as_real()));
  };
}

Type compare_type(std::span<const Type> ts) {
  const bool str0 = ts[0] == Type::Str, str1 = ts[1] == Type::Str;
  if ((str0 && is_num(ts[1])) || (str1 && is_num(ts[0]))) {
    throw Error(ErrorKind::Type, "cannot compare string with number");
  }
  return Type::Bool;
}

void binary(OpRegistry& r, const char* name, TypeSet accepts, TypeRule out, OpEval eval) {
  OpSpec s;
  s.name = name;
  s.params = {sig("lhs", accepts), sig("rhs", accepts)};
  s.out_type = std::move(out);
  s.eval = std::move(eval);
  r.register_op(std::move(s));
}

void pure(OpRegistry& r, const char* name, std::vector<Param> params, TypeRule out, OpEval eval) {
  OpSpec s;
  s.name = name;
  s.params = std::move(params);
  s.out_type = std::move(out);
  s.eval = std::move(eval);
  r.register_op(std::move(s));
}

void register_arithmetic(OpRegistry& r) {
  const TypeSet num = TypeSet::numeric();
  binary(
      r, "add", {Type::Int, Type::Real, Type::Str},
      [](std::span<const Type> ts) {
        const bool s0 = ts[0] == Type::Str, s1 = ts[1] == Type::Str;
        if (s0 && s1) return Type::Str;
        if (s0 || s1) {
          if (ts[0] == Type::Any || ts[1] == Type::Any) return Type::Str;
          throw Error(ErrorKind::Type, "'+' cannot mix string and number; use str()");
        }
        return arith_type(ts);
      },
      [](OpContext& c) {
        const Value& a = c.inputs[0];
        const Value& b = c.inputs[1];
        if (a.type() == Type::Str && b.type() == Type::Str) {
          return Value::string(a.as_str() + b.as_str());
        }
        return arith(wrap_add, [](double x, double y) { return x + y; })(c);
      });
  binary(r, "sub", num, arith_type, arith(wrap_sub, [](double x, double y) { return x - y; }));
  binary(r, "mul", num, arith_type, arith(wrap_mul, [](double x, double y) { return x * y; }));
  binary(r, "div", num, arith_type, [](OpContext& c) {
    auto [a, b] = promote_numeric(c.inputs[0], c.inputs[1]);
    if (a.type() == Type::Int) {
      const std::int64_t y = b.as_int();
      if (y == 0) throw Error(ErrorKind::DivisionByZero, "integer division by zero");
      const std::int64_t x = a.as_int();
      if (y == -1) return Value::integer(wrap_sub(0, x));
      return Value::integer(x / y);
    }
    if (b.as_real() == 0.0) throw Error(ErrorKind::DivisionByZero, "division by zero");
    return Value::real(a.as_real() / b.as_real());
  });
  binary(r, "mod", Type::Int, returns(Type::Int), [](OpContext& c) {
    const std::int64_t x = c.inputs[0].as_int();
    const std::int64_t y = c.inputs[1].as_int();
    if (y == 0) throw Error(ErrorKind::DivisionByZero, "modulo by zero");
    if (y == -1) return Value::integer(0);
    return Value::integer(x % y);
  });

  const TypeSet ordered{Type::Int, Type::Real, Type::Str};
  binary(r, "lt", ordered, compare_type, compare([](auto x, auto y) { return x < y; }));
  binary(r, "le", ordered, compare_type, compare([](auto x, auto y) { return x <= y; }));
  binary(r, "gt", ordered, compare_type, compare([](auto x, auto y) { return x > y; }));
  binary(r, "ge", ordered, compare_type, compare([](auto x, auto y) { return x >= y; }));
  binary(r, "eq", TypeSet::any(), returns(Type::Bool),
         [](OpContext& c) { return Value::boolean(value_eq(c.inputs[0], c.inputs[1])); });
  binary(r, "ne", TypeSet::any(), returns(Type::Bool),
         [](OpContext& c) { return Value::boolean(!value_eq(c.inputs[0], c.inputs[1])); });
  binary(r, "and", Type::Bool, returns(Type::Bool), [](OpContext& c) {
    return Value::boolean(c.inputs[0].as_bool() && c.inputs[1].as_bool());
  });
  binary(r, "or", Type::Bool, returns(Type::Bool), [](OpContext& c) {
    return Value::boolean(c.inputs[0].as_bool() || c.inputs[1].as_bool());
  });

  pure(r, "neg", {sig("x", num)}, arith_type, [](OpContext& c) {
    const Value& x = c.inputs[0];
    if (x.type() == Type::Int) return Value::integer(wrap_sub(0, x.as_int()));
    return Value::real(-x.as_real());
  });
  pure(r, "not", {sig("x", Type::Bool)}, returns(Type::Bool),
       [](OpContext& c) { return Value::boolean(!c.inputs[0].as_bool()); });
  pure(r, "const", {constant("value", TypeSet::any())}, nullptr,
       [](OpContext& c) { return c.const_arg("value"); });
}

double reduce_stat(const std::vector<double>& xs, const char* what) {
  if (xs.empty()) throw Error(ErrorKind::EmptyInput, std::string(what) + " of empty input");
  if (std::strcmp(what, "max") == 0) return *std::max_element(xs.begin(), xs.end());
  if (std::strcmp(what, "min") == 0) return *std::min_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

void register_statistics(OpRegistry& r) {
  const TypeSet data{Type::Field, Type::Array};
  for (const char* what : {"max", "min", "avg"}) {
    pure(r, (std::string(what) + "_array").c_str(), {sig("x", data)}, returns(Type::Real),
         [what](OpContext& c) { return Value::real(reduce_stat(numeric_values(c.inputs[0]), what)); });
    pure(r, (std::string(what) + "_list").c_str(), {sig("xs", Type::Array)}, returns(Type::Array),
         [what](OpContext& c) {
           const ArrayData& a = c.inputs[0].as_array();
           std::vector<Value> items(a.items.size());
           std::vector<bool> valid(a.items.size(), false);
           for (std::size_t i = 0; i < a.items.size(); ++i) {
             if (!a.valid[i]) continue;
             auto xs = numeric_values(a.items[i]);
             if (xs.empty()) continue;
             items[i] = Value::real(reduce_stat(xs, what));
             valid[i] = true;
           }
           return Value::array(std::move(items), std::move(valid));
         });
  }
  auto to_array = [](const std::vector<double>& xs) {
    std::vector<Value> items;
    items.reserve(xs.size());
    for (double x : xs) items.push_back(Value::real(x));
    return Value::array(std::move(items));
  };
  pure(r, "moments", {sig("x", data)}, returns(Type::Array),
       [to_array](OpContext& c) { return to_array(moments(numeric_values(c.inputs[0]))); });
  pure(r, "feature_moments", {sig("xs", Type::Array)}, returns(Type::Array),
       [to_array](OpContext& c) {
         const ArrayData& a = c.inputs[0].as_array();
         std::vector<double> out;
         for (std::size_t i = 0; i < a.items.size(); ++i) {
           if (!a.valid[i]) throw Error(ErrorKind::InvalidSlot, "feature " + std::to_string(i) + " is undefined");
           auto m = moments(numeric_values(a.items[i]));
           out.insert(out.end(), m.begin(), m.end());
         }
         return to_array(out);
       });
  pure(r, "l2_rel_dist", {sig("a", data), sig("b", data)}, returns(Type::Real),
       [](OpContext& c) {
         return Value::real(l2_rel_dist(numeric_values(c.inputs[0]), numeric_values(c.inputs[1])));
       });
  pure(r, "slice_image",
       {sig("field", Type::Field), constant("axis", Type::Int), constant("index", Type::Int)},
       returns(Type::Field), [](OpContext& c) {
         return slice_image(c.inputs[0].as_field(), static_cast<int>(c.const_arg("axis").as_int()),
                            c.const_arg("index").as_int());
       });
  pure(r, "normalize", {sig("field", Type::Field)}, returns(Type::Field), [](OpContext& c) {
    const FieldData& f = c.inputs[0].as_field();
    const auto [lo, hi] = std::minmax_element(f.data.begin(), f.data.end());
    std::vector<double> out(f.data.size(), 0.5);
    if (*hi > *lo) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = (f.data[i] - *lo) / (*hi - *lo);
    }
    return Value::field(f.dims, std::move(out));
  });
  pure(r, "str", {sig("x")}, returns(Type::Str),
       [](OpContext& c) { return Value::string(to_display(c.inputs[0])); });
  pure(r, "list", {variadic("items")}, returns(Type::Array), [](OpContext& c) {
    return Value::array(std::vector<Value>(c.inputs.begin(), c.inputs.end()));
  });
  pure(r, "at", {sig("xs", Type::Array), sig("i", Type::Int)}, nullptr, [](OpContext& c) {
    const ArrayData& a = c.inputs[0].as_array();
    const std::int64_t i = c.inputs[1].as_int();
    if (i < 0 || static_cast<std::size_t>(i) >= a.items.size()) {
      throw Error(ErrorKind::IndexOutOfRange, "index " + std::to_string(i) + " outside [0, " +
                                                  std::to_string(a.items.size()) + ")");
    }
    if (!a.valid[i]) {
      throw Error(ErrorKind::InvalidSlot, "slot " + std::to_string(i) + " is undefined");
    }
    return a.items[i];
  });
}

// --- impure ----------------------------------------------------------------------

std::int64_t positive_n(const ConstArgs& args, const char* op) {
  auto it = args.find("n");
  const std::int64_t n = it == args.end() ? 0 : it->second.as_int();
  if (n < 1) throw Error(ErrorKind::Config, std::string(op) + " needs n >= 1");
  return n;
}

template <class S>
void latch(OpRegistry& r, const char* name, std::vector<Param> params,
           std::function<std::unique_ptr<OpState>(const ConstArgs&)> factory,
           std::function<bool(S&, OpContext&)> step) {
  OpSpec s;
  s.name = name;
  s.kind = NodeKind::ImpureFn;
  s.is_impure = true;
  s.params = std::move(params);
  s.out_type = returns(Type::Bool);
  s.state_factory = std::move(factory);
  s.eval = [step](OpContext& c) { return Value::boolean(step(c.state_as<S>(), c)); };
  r.register_op(std::move(s));
}

template <class S>
std::function<std::unique_ptr<OpState>(const ConstArgs&)> plain() {
  return [](const ConstArgs&) { return std::make_unique<S>(); };
}

void register_temporal(OpRegistry& r) {
  const Param x = sig("x", Type::Bool);
  const Param n = constant("n", Type::Int);
  latch<UntilState>(r, "until", {x}, plain<UntilState>(),
                    [](UntilState& s, OpContext& c) { return s.step(c.inputs[0].as_bool()); });
  latch<AfterState>(r, "after", {x}, plain<AfterState>(),
                    [](AfterState& s, OpContext& c) { return s.step(c.inputs[0].as_bool()); });
  latch<FirstNState>(
      r, "first", {x}, [](const ConstArgs&) { return std::make_unique<FirstNState>(1); },
      [](FirstNState& s, OpContext& c) { return s.step(c.inputs[0].as_bool()); });
  latch<FirstNState>(
      r, "firstN", {x, n},
      [](const ConstArgs& a) { return std::make_unique<FirstNState>(positive_n(a, "firstN")); },
      [](FirstNState& s, OpContext& c) { return s.step(c.inputs[0].as_bool()); });
  latch<AfterNState>(
      r, "afterN", {x, n},
      [](const ConstArgs& a) { return std::make_unique<AfterNState>(positive_n(a, "afterN")); },
      [](AfterNState& s, OpContext& c) { return s.step(c.inputs[0].as_bool()); });
  latch<SwitchState>(r, "switch", {sig("on", Type::Bool), sig("off", Type::Bool)},
                     plain<SwitchState>(), [](SwitchState& s, OpContext& c) {
                       return s.step(c.inputs[0].as_bool(), c.inputs[1].as_bool());
                     });
  latch<CountNState>(
      r, "countN", {sig("since", Type::Bool), n},
      [](const ConstArgs& a) { return std::make_unique<CountNState>(positive_n(a, "countN")); },
      [](CountNState& s, OpContext& c) { return s.step(c.inputs[0].as_bool()); });

  OpSpec count;
  count.name = "count";
  count.kind = NodeKind::ImpureFn;
  count.is_impure = true;
  count.out_type = returns(Type::Int);
  count.state_factory = plain<CountState>();
  count.eval = [](OpContext& c) { return Value::integer(++c.state_as<CountState>().count); };
  r.register_op(std::move(count));

  OpSpec win;
  win.name = "window";
  win.kind = NodeKind::ImpureFn;
  win.is_impure = true;
  win.params = {sig("condition", Type::Bool), sig("field"), constant("max_size", Type::Int),
                constant("min_size", Type::Int, std::nullopt, true),
                constant("mode", Type::Str, Value::string("sparse"))};
  win.out_type = returns(Type::Array);
  win.state_factory = [](const ConstArgs& a) -> std::unique_ptr<OpState> {
    auto get = [&](const char* k) -> const Value* {
      auto it = a.find(k);
      return it == a.end() ? nullptr : &it->second;
    };
    const Value* max = get("max_size");
    if (!max) throw Error(ErrorKind::Config, "window needs max_size");
    const Value* min = get("min_size");
    const Value* mode = get("mode");
    return std::make_unique<WindowState>(max->as_int(), min ? min->as_int() : max->as_int(),
                                         mode ? parse_window_mode(mode->as_str())
                                              : WindowMode::Sparse);
  };
  win.eval = [](OpContext& c) {
    return c.state_as<WindowState>().update(c.inputs[0].as_bool(), c.inputs[1]);
  };
  r.register_op(std::move(win));
}

// --- global ----------------------------------------------------------------------

// Flattens a reducible value into doubles; `shape` rebuilds it afterwards.
std::vector<double> reducible(const Value& v) {
  switch (v.type()) {
    case Type::Int:
    case Type::Real: return {v.as_real()};
    case Type::Field: return v.as_field().data;
    case Type::Array: {
      const ArrayData& a = v.as_array();
      std::vector<double> out;
      for (std::size_t i = 0; i < a.items.size(); ++i) {
        if (!a.valid[i]) throw Error(ErrorKind::InvalidSlot, "cannot reduce an undefined slot");
        if (!a.items[i].is_numeric()) {
          throw Error(ErrorKind::TypeMismatch, "reductions need numeric array items");
        }
        out.push_back(a.items[i].as_real());
      }
      return out;
    }
    default:
      throw Error(ErrorKind::TypeMismatch,
                  std::string("cannot reduce a ") + to_string(v.type()));
  }
}

Value reshape(const Value& like, const std::vector<double>& xs, bool keep_int) {
  auto scalar = [&](const Value& orig, double x) {
    return keep_int && orig.type() == Type::Int ? Value::integer(static_cast<std::int64_t>(x))
                                                : Value::real(x);
  };
  switch (like.type()) {
    case Type::Int:
    case Type::Real: return scalar(like, xs.at(0));
    case Type::Field: return Value::field(like.as_field().dims, xs);
    default: {
      const ArrayData& a = like.as_array();
      std::vector<Value> items;
      for (std::size_t i = 0; i < xs.size(); ++i) items.push_back(scalar(a.items[i], xs[i]));
      return Value::array(std::move(items));
    }
  }
}

void register_reductions(OpRegistry& r) {
  struct R {
    const char* name;
    ReduceOp op;
    bool avg;
  };
  for (R spec : {R{"reduce_sum", ReduceOp::Sum, false}, R{"reduce_avg", ReduceOp::Sum, true},
                 R{"reduce_min", ReduceOp::Min, false}, R{"reduce_max", ReduceOp::Max, false}}) {
    OpSpec s;
    s.name = spec.name;
    s.is_global = true;
    s.needs_communicator = true;
    s.params = {sig("x", {Type::Int, Type::Real, Type::Array, Type::Field})};
    const bool avg = spec.avg;
    s.out_type = [avg](std::span<const Type> ts) {
      return avg && ts[0] == Type::Int ? Type::Real : ts[0];
    };
    s.eval = [spec](OpContext& c) {
      Communicator& comm = c.communicator();
      const auto payload = reducible(c.inputs[0]);
      auto out = comm.allreduce(spec.op, payload);
      if (spec.avg) {
        for (double& x : out) x /= comm.size();
      }
      return reshape(c.inputs[0], out, !spec.avg);
    };
    r.register_op(std::move(s));
  }
}

// --- actions ---------------------------------------------------------------------

std::ofstream open_output(ActionEnv& env, const std::string& path, bool binary) {
  const auto full = env.resolve(path);
  std::error_code ec;
  if (full.has_parent_path()) std::filesystem::create_directories(full.parent_path(), ec);
  auto mode = std::ios::out;
  if (binary) mode |= std::ios::binary;
  const bool first = env.touched.insert(full).second;
  mode |= first ? std::ios::trunc : std::ios::app;
  std::ofstream out(full, mode);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + full.string() + "' for writing");
  return out;
}

void check_written(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string csv_value(const Value& v) { return csv_cell(to_display(v)); }

void action(OpRegistry& r, const char* name, std::vector<Param> params, OpEval eval) {
  OpSpec s;
  s.name = name;
  s.kind = NodeKind::Action;
  s.params = std::move(params);
  s.eval = std::move(eval);
  r.register_op(std::move(s));
}

void register_actions(OpRegistry& r) {
  action(r, "save_csv", {variadic("values"), sig("path", Type::Str)}, [](OpContext& c) {
    ActionEnv& env = c.action_env();
    const std::size_t n = c.inputs.size() - 1;
    const std::string& path = c.inputs[n].as_str();
    const bool fresh = !env.touched.count(env.resolve(path));
    auto out = open_output(env, path, false);
    if (fresh) {
      out << "time";
      for (std::size_t i = 0; i < n; ++i) out << ',' << csv_cell(c.input_names[i]);
      out << '\n';
    }
    out << c.t;
    for (std::size_t i = 0; i < n; ++i) out << ',' << csv_value(c.inputs[i]);
    out << '\n';
    check_written(out, path);
    return Value();
  });

  action(r, "save_statistics", {sig("data", Type::Array), sig("path", Type::Str)},
         [](OpContext& c) {
           ActionEnv& env = c.action_env();
           const ArrayData& a = c.inputs[0].as_array();
           const std::string& path = c.inputs[1].as_str();
           std::size_t width = 0;
           bool nested = false;
           for (std::size_t i = 0; i < a.items.size(); ++i) {
             if (a.valid[i] && a.items[i].type() == Type::Array) {
               nested = true;
               width = std::max(width, a.items[i].as_array().items.size());
             }
           }
           auto out = open_output(env, path, false);
           if (!nested) {
             // One row: each slot is a cell; undefined slots stay empty.
             for (std::size_t i = 0; i < a.items.size(); ++i) {
               if (i) out << ',';
               if (a.valid[i]) out << csv_value(a.items[i]);
             }
             out << '\n';
           } else {
             for (std::size_t i = 0; i < a.items.size(); ++i) {
               const ArrayData* row = a.valid[i] ? &a.items[i].as_array() : nullptr;
               for (std::size_t j = 0; j < width; ++j) {
                 if (j) out << ',';
                 if (row && j < row->items.size() && row->valid[j]) out << csv_value(row->items[j]);
               }
               out << '\n';
             }
           }
           check_written(out, path);
           return Value();
         });

  action(r, "save_field", {sig("field", Type::Field), sig("path", Type::Str)}, [](OpContext& c) {
    ActionEnv& env = c.action_env();
    const FieldData& f = c.inputs[0].as_field();
    const std::string& path = c.inputs[1].as_str();
    env.touched.erase(env.resolve(path));  // one field per file
    auto out = open_output(env, path, true);
    out << "dims " << f.dims[0] << ' ' << f.dims[1] << ' ' << f.dims[2] << '\n';
    for (double x : f.data) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof bits);
      unsigned char le[8];
      for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(bits >> (8 * i));
      out.write(reinterpret_cast<const char*>(le), 8);
    }
    check_written(out, path);
    return Value();
  });

  action(r, "save_pgm", {sig("image", Type::Field), sig("path", Type::Str)}, [](OpContext& c) {
    ActionEnv& env = c.action_env();
    const FieldData& f = c.inputs[0].as_field();
    const std::string& path = c.inputs[1].as_str();
    // Width is the innermost non-unit axis; the rest folds into rows.
    std::size_t width = 1;
    for (int ax = 2; ax >= 0; --ax) {
      if (f.dims[ax] > 1) {
        width = f.dims[ax];
        break;
      }
    }
    const std::size_t height = f.size() / width;
    const auto [lo, hi] = std::minmax_element(f.data.begin(), f.data.end());
    env.touched.erase(env.resolve(path));
    auto out = open_output(env, path, true);
    out << "P5\n" << width << ' ' << height << "\n255\n";
    for (double x : f.data) {
      unsigned char px = 128;
      if (*hi > *lo) px = static_cast<unsigned char>(std::lround((x - *lo) / (*hi - *lo) * 255.0));
      out.put(static_cast<char>(px));
    }
    check_written(out, path);
    return Value();
  });

  action(r, "print", {variadic("values")}, [](OpContext& c) {
    ActionEnv& env = c.action_env();
    std::ostream& out = env.out ? *env.out : std::cout;
    for (std::size_t i = 0; i < c.inputs.size(); ++i) {
      if (i) out << ' ';
      out << to_display(c.inputs[i]);
    }
    out << '\n';
    return Value();
  });
}

}  // namespace

void register_builtins(OpRegistry& registry) {
  register_arithmetic(registry);
  register_statistics(registry);
  register_temporal(registry);
  register_reductions(registry);
  register_actions(registry);
}

OpRegistry make_builtin_registry() {
  OpRegistry r;
  register_builtins(r);
  return r;
}

}  // namespace diva
