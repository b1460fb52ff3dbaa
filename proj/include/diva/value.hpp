#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "diva/error.hpp"

namespace diva {

// Discrete simulation timestep index.
using TimeStep = std::int64_t;

// Static type tag used by the compiler for signature checks. `Any` is the
// wildcard produced by ops whose result type depends on runtime data.
enum class Type : std::uint8_t { None, Bool, Int, Real, Str, Array, Field, Any };

const char* to_string(Type type);

// Bit set of accepted types for an operator parameter.
class TypeSet {
 public:
  constexpr TypeSet() = default;
  constexpr TypeSet(Type t) : bits_(bit(t)) {}  // NOLINT(implicit)
  constexpr TypeSet(std::initializer_list<Type> ts) {
    for (Type t : ts) bits_ |= bit(t);
  }

  static constexpr TypeSet any() {
    TypeSet s;
    s.bits_ = 0xFF & ~bit(Type::None);
    return s;
  }
  static constexpr TypeSet numeric() { return {Type::Int, Type::Real}; }

  // `Any` on either side is compatible with everything.
  constexpr bool accepts(Type t) const {
    if (t == Type::Any) return bits_ != 0;
    return (bits_ & bit(t)) != 0 || (bits_ & bit(Type::Any)) != 0;
  }
  std::string describe() const;

 private:
  static constexpr std::uint8_t bit(Type t) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(t));
  }
  std::uint8_t bits_ = 0;
};

class Value;

struct ArrayData {
  std::vector<Value> items;
  std::vector<bool> valid;
};

struct FieldData {
  std::array<std::size_t, 3> dims{1, 1, 1};
  std::vector<double> data;

  std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * dims[1] + j) * dims[2] + k;
  }
};

// Immutable runtime datum flowing along DAG edges. Arrays and fields are held
// through shared pointers to const so copies are cheap and values can be
// shared across engines.
class Value {
 public:
  Value() = default;  // None

  static Value boolean(bool b);
  static Value integer(std::int64_t i);
  static Value real(double r);
  static Value string(std::string s);
  static Value array(std::vector<Value> items, std::vector<bool> valid);
  static Value array(std::vector<Value> items);  // all slots valid
  static Value field(std::array<std::size_t, 3> dims, std::vector<double> data);

  Type type() const;
  bool is_none() const { return std::holds_alternative<std::monostate>(v_); }
  bool is_numeric() const {
    return std::holds_alternative<std::int64_t>(v_) ||
           std::holds_alternative<double>(v_);
  }

  // Checked accessors; throw Error(TypeMismatch) on the wrong variant.
  bool as_bool() const;
  std::int64_t as_int() const;
  double as_real() const;  // promotes Int
  const std::string& as_str() const;
  const ArrayData& as_array() const;
  const FieldData& as_field() const;

 private:
  using Storage =
      std::variant<std::monostate, bool, std::int64_t, double, std::string,
                   std::shared_ptr<const ArrayData>,
                   std::shared_ptr<const FieldData>>;
  explicit Value(Storage v) : v_(std::move(v)) {}
  Storage v_;
};

// Structural equality with exact Int/Real promotion. Cross-variant
// non-numeric comparisons are false.
bool value_eq(const Value& a, const Value& b);

// Same type tag and value_eq. Used where Int(3) and Real(3.0) must differ.
bool value_identical(const Value& a, const Value& b);

// Brings two numeric values to a common type (Real if either is Real).
std::pair<Value, Value> promote_numeric(const Value& a, const Value& b);

// Shortest decimal that round-trips, always containing '.' or an exponent.
std::string format_real(double r);

// Human-readable rendering (used by str(), print and CSV cells).
std::string to_display(const Value& v);

// 64-bit FNV-1a digest over the value's bit pattern and shape.
std::uint64_t value_digest(const Value& v);

}  // namespace diva
