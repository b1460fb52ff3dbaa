#pragma once

#include <json.hpp>

#include "diva/value.hpp"

namespace diva {

// Lossless JSON encoding of a Value. Reals are JSON floats (round-trip
// exact); non-finite reals become {"r": "nan" | "inf" | "-inf"}.
nlohmann::json value_to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);

// Compact form used in trace lines: scalars in full, arrays and fields as a
// digest object so that traces stay small but still compare exactly.
nlohmann::json value_to_trace_json(const Value& v);

}  // namespace diva
