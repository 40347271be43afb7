#pragma once

#include <json.hpp>

#include <string>

#include "loom/common.hpp"

namespace loom {

// Self-describing structured datum: null, boolean, integer, string, list, map.
// Structural equality and a canonical text form come with the representation;
// object keys are kept sorted, so dumps are deterministic.
using Value = nlohmann::json;

inline std::string value_dump(const Value& v) { return v.dump(); }

inline Value value_parse(const std::string& text) {
  try {
    return Value::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("bad value literal '" + text + "': " + e.what());
  }
}

// Error-tagged response values (user exceptions, timeouts) are ordinary
// values wearing a marker key.
inline Value error_value(const std::string& kind, const std::string& detail = "") {
  Value v = Value::object();
  v["$err"] = kind;
  if (!detail.empty()) v["detail"] = detail;
  return v;
}

inline bool is_error_value(const Value& v) {
  return v.is_object() && v.contains("$err");
}

}  // namespace loom
