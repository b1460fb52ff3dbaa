#include "diva/value_json.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace diva {

using nlohmann::json;

json value_to_json(const Value& v) {
  switch (v.type()) {
    case Type::None:
    case Type::Any: return nullptr;
    case Type::Bool: return v.as_bool();
    case Type::Int: return v.as_int();
    case Type::Real: {
      const double r = v.as_real();
      if (std::isfinite(r)) return r;
      return json{{"r", format_real(r)}};
    }
    case Type::Str: return v.as_str();
    case Type::Array: {
      const ArrayData& a = v.as_array();
      json items = json::array();
      json valid = json::array();
      for (std::size_t i = 0; i < a.items.size(); ++i) {
        items.push_back(value_to_json(a.items[i]));
        valid.push_back(static_cast<bool>(a.valid[i]));
      }
      return json{{"a", std::move(items)}, {"valid", std::move(valid)}};
    }
    case Type::Field: {
      const FieldData& f = v.as_field();
      return json{{"dims", f.dims}, {"data", f.data}};
    }
  }
  return nullptr;
}

Value value_from_json(const json& j) {
  if (j.is_null()) return Value();
  if (j.is_boolean()) return Value::boolean(j.get<bool>());
  if (j.is_number_integer()) return Value::integer(j.get<std::int64_t>());
  if (j.is_number_float()) return Value::real(j.get<double>());
  if (j.is_string()) return Value::string(j.get<std::string>());
  if (j.is_object()) {
    if (j.contains("r")) {
      const auto s = j.at("r").get<std::string>();
      if (s == "nan") return Value::real(std::numeric_limits<double>::quiet_NaN());
      if (s == "inf") return Value::real(std::numeric_limits<double>::infinity());
      if (s == "-inf") return Value::real(-std::numeric_limits<double>::infinity());
    }
    if (j.contains("a")) {
      std::vector<Value> items;
      std::vector<bool> valid;
      for (const auto& item : j.at("a")) items.push_back(value_from_json(item));
      for (const auto& flag : j.at("valid")) valid.push_back(flag.get<bool>());
      return Value::array(std::move(items), std::move(valid));
    }
    if (j.contains("dims")) {
      return Value::field(j.at("dims").get<std::array<std::size_t, 3>>(),
                          j.at("data").get<std::vector<double>>());
    }
  }
  throw Error(ErrorKind::InvalidValue, "cannot decode value from " + j.dump());
}

json value_to_trace_json(const Value& v) {
  if (v.type() != Type::Array && v.type() != Type::Field) return value_to_json(v);
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(value_digest(v)));
  return json{{"type", to_string(v.type())}, {"digest", hex}};
}

}  // namespace diva
