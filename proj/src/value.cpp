#include "diva/value.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>

namespace diva {

const char* to_string(Type type) {
  switch (type) {
    case Type::None: return "none";
    case Type::Bool: return "bool";
    case Type::Int: return "int";
    case Type::Real: return "real";
    case Type::Str: return "string";
    case Type::Array: return "array";
    case Type::Field: return "field";
    case Type::Any: return "any";
  }
  return "?";
}

std::string TypeSet::describe() const {
  if (accepts(Type::Any) && (bits_ & bit(Type::Any)) != 0) return "any";
  std::string out;
  for (Type t : {Type::Bool, Type::Int, Type::Real, Type::Str, Type::Array,
                 Type::Field}) {
    if ((bits_ & bit(t)) == 0) continue;
    if (!out.empty()) out += '|';
    out += to_string(t);
  }
  return out.empty() ? "nothing" : out;
}

Value Value::boolean(bool b) { return Value(Storage(b)); }
Value Value::integer(std::int64_t i) { return Value(Storage(i)); }
Value Value::real(double r) { return Value(Storage(r)); }
Value Value::string(std::string s) { return Value(Storage(std::move(s))); }

Value Value::array(std::vector<Value> items, std::vector<bool> valid) {
  if (items.size() != valid.size()) {
    throw Error(ErrorKind::InvalidValue,
                "array has " + std::to_string(items.size()) + " items but " +
                    std::to_string(valid.size()) + " validity flags");
  }
  auto data = std::make_shared<ArrayData>();
  data->items = std::move(items);
  data->valid = std::move(valid);
  return Value(Storage(std::shared_ptr<const ArrayData>(std::move(data))));
}

Value Value::array(std::vector<Value> items) {
  std::vector<bool> valid(items.size(), true);
  return array(std::move(items), std::move(valid));
}

Value Value::field(std::array<std::size_t, 3> dims, std::vector<double> data) {
  if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0) {
    throw Error(ErrorKind::InvalidValue, "field dimensions must be positive");
  }
  auto f = std::make_shared<FieldData>();
  f->dims = dims;
  if (data.size() != f->size()) {
    throw Error(ErrorKind::InvalidValue,
                "field data length " + std::to_string(data.size()) +
                    " does not match dims product " + std::to_string(f->size()));
  }
  f->data = std::move(data);
  return Value(Storage(std::shared_ptr<const FieldData>(std::move(f))));
}

Type Value::type() const {
  switch (v_.index()) {
    case 0: return Type::None;
    case 1: return Type::Bool;
    case 2: return Type::Int;
    case 3: return Type::Real;
    case 4: return Type::Str;
    case 5: return Type::Array;
    case 6: return Type::Field;
  }
  return Type::None;
}

namespace {

[[noreturn]] void mismatch(Type want, Type got) {
  throw Error(ErrorKind::TypeMismatch, std::string("expected ") +
                                           to_string(want) + ", got " +
                                           to_string(got));
}

}  // namespace

bool Value::as_bool() const {
  if (const bool* b = std::get_if<bool>(&v_)) return *b;
  mismatch(Type::Bool, type());
}

std::int64_t Value::as_int() const {
  if (const auto* i = std::get_if<std::int64_t>(&v_)) return *i;
  mismatch(Type::Int, type());
}

double Value::as_real() const {
  if (const auto* r = std::get_if<double>(&v_)) return *r;
  if (const auto* i = std::get_if<std::int64_t>(&v_)) return static_cast<double>(*i);
  mismatch(Type::Real, type());
}

const std::string& Value::as_str() const {
  if (const auto* s = std::get_if<std::string>(&v_)) return *s;
  mismatch(Type::Str, type());
}

const ArrayData& Value::as_array() const {
  if (const auto* a = std::get_if<std::shared_ptr<const ArrayData>>(&v_)) return **a;
  mismatch(Type::Array, type());
}

const FieldData& Value::as_field() const {
  if (const auto* f = std::get_if<std::shared_ptr<const FieldData>>(&v_)) return **f;
  mismatch(Type::Field, type());
}

namespace {

bool real_eq(double a, double b) {
  return a == b || (std::isnan(a) && std::isnan(b));
}

bool int_real_eq(std::int64_t i, double r) {
  if (!std::isfinite(r) || std::trunc(r) != r) return false;
  // 2^63 is exactly representable; anything at or beyond it is out of range.
  constexpr double kLimit = 9223372036854775808.0;
  if (r >= kLimit || r < -kLimit) return false;
  return static_cast<std::int64_t>(r) == i;
}

}  // namespace

bool value_eq(const Value& a, const Value& b) {
  const Type ta = a.type();
  const Type tb = b.type();
  if (ta == Type::Int && tb == Type::Real) return int_real_eq(a.as_int(), b.as_real());
  if (ta == Type::Real && tb == Type::Int) return int_real_eq(b.as_int(), a.as_real());
  if (ta != tb) return false;
  switch (ta) {
    case Type::None: return true;
    case Type::Bool: return a.as_bool() == b.as_bool();
    case Type::Int: return a.as_int() == b.as_int();
    case Type::Real: return real_eq(a.as_real(), b.as_real());
    case Type::Str: return a.as_str() == b.as_str();
    case Type::Array: {
      const ArrayData& x = a.as_array();
      const ArrayData& y = b.as_array();
      if (&x == &y) return true;
      if (x.valid != y.valid || x.items.size() != y.items.size()) return false;
      for (std::size_t i = 0; i < x.items.size(); ++i) {
        if (!value_eq(x.items[i], y.items[i])) return false;
      }
      return true;
    }
    case Type::Field: {
      const FieldData& x = a.as_field();
      const FieldData& y = b.as_field();
      if (&x == &y) return true;
      if (x.dims != y.dims) return false;
      for (std::size_t i = 0; i < x.data.size(); ++i) {
        if (!real_eq(x.data[i], y.data[i])) return false;
      }
      return true;
    }
    case Type::Any: return false;
  }
  return false;
}

bool value_identical(const Value& a, const Value& b) {
  if (a.type() != b.type()) return false;
  if (a.type() == Type::Array) {
    const ArrayData& x = a.as_array();
    const ArrayData& y = b.as_array();
    if (x.valid != y.valid || x.items.size() != y.items.size()) return false;
    for (std::size_t i = 0; i < x.items.size(); ++i) {
      if (!value_identical(x.items[i], y.items[i])) return false;
    }
    return true;
  }
  return value_eq(a, b);
}

std::pair<Value, Value> promote_numeric(const Value& a, const Value& b) {
  if (!a.is_numeric() || !b.is_numeric()) {
    throw Error(ErrorKind::TypeMismatch,
                std::string("numeric operands required, got ") +
                    to_string(a.type()) + " and " + to_string(b.type()));
  }
  if (a.type() == Type::Real || b.type() == Type::Real) {
    return {Value::real(a.as_real()), Value::real(b.as_real())};
  }
  return {a, b};
}

std::string format_real(double r) {
  if (std::isnan(r)) return "nan";
  if (std::isinf(r)) return r > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), r);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string to_display(const Value& v) {
  switch (v.type()) {
    case Type::None: return "";
    case Type::Bool: return v.as_bool() ? "true" : "false";
    case Type::Int: return std::to_string(v.as_int());
    case Type::Real: return format_real(v.as_real());
    case Type::Str: return v.as_str();
    case Type::Array: {
      const ArrayData& a = v.as_array();
      std::string out = "[";
      for (std::size_t i = 0; i < a.items.size(); ++i) {
        if (i) out += ", ";
        out += a.valid[i] ? to_display(a.items[i]) : "_";
      }
      return out + "]";
    }
    case Type::Field: {
      const FieldData& f = v.as_field();
      return "field(" + std::to_string(f.dims[0]) + "x" + std::to_string(f.dims[1]) +
             "x" + std::to_string(f.dims[2]) + ")";
    }
    case Type::Any: break;
  }
  return "?";
}

namespace {

struct Fnv {
  std::uint64_t h = 1469598103934665603ull;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ull;
    }
  }
  template <class T>
  void pod(const T& x) {
    bytes(&x, sizeof(T));
  }
};

void digest_into(Fnv& f, const Value& v) {
  f.pod(static_cast<std::uint8_t>(v.type()));
  switch (v.type()) {
    case Type::None:
    case Type::Any: break;
    case Type::Bool: f.pod(static_cast<std::uint8_t>(v.as_bool())); break;
    case Type::Int: f.pod(v.as_int()); break;
    case Type::Real: f.pod(v.as_real()); break;
    case Type::Str: {
      const auto& s = v.as_str();
      f.pod(s.size());
      f.bytes(s.data(), s.size());
      break;
    }
    case Type::Array: {
      const ArrayData& a = v.as_array();
      f.pod(a.items.size());
      for (std::size_t i = 0; i < a.items.size(); ++i) {
        f.pod(static_cast<std::uint8_t>(a.valid[i]));
        digest_into(f, a.items[i]);
      }
      break;
    }
    case Type::Field: {
      const FieldData& fd = v.as_field();
      f.pod(fd.dims);
      f.bytes(fd.data.data(), fd.data.size() * sizeof(double));
      break;
    }
  }
}

}  // namespace

std::uint64_t value_digest(const Value& v) {
  Fnv f;
  digest_into(f, v);
  return f.h;
}

}  // namespace diva
