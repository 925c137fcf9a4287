#pragma once

// Allow-list schema for blind bundle payloads. Anything outside it (iteration
// numbers, config digests, timestamps, seeds) could reveal provenance.

#include <set>
#include <string>

#include "collatio/serialize.hpp"

namespace schema {

inline bool is_line_id(const nlohmann::json& j) {
  return j.is_array() && j.size() == 2 && j[0].is_string() && j[1].is_number_unsigned();
}

inline std::string payload_violation(const nlohmann::json& payload) {
  if (!payload.is_object()) return "payload is not an object";
  const std::set<std::string> top = {"bundle_id", "editions", "X", "Y"};
  for (const auto& [k, v] : payload.items())
    if (!top.count(k)) return "unexpected top-level field " + k;
  for (const auto& k : top)
    if (!payload.contains(k)) return "missing field " + k;
  if (!payload["bundle_id"].is_string()) return "bundle_id not a string";
  if (!payload["editions"].is_array() || payload["editions"].size() != 2) return "editions malformed";
  const std::set<std::string> pair_fields = {"a", "b", "sim", "bin", "span"};
  for (const char* side : {"X", "Y"}) {
    if (!payload[side].is_array()) return std::string(side) + " is not a list";
    for (const auto& p : payload[side]) {
      if (!p.is_object()) return "pair is not an object";
      for (const auto& [k, v] : p.items())
        if (!pair_fields.count(k)) return "unexpected pair field " + k;
      if (!is_line_id(p.value("a", nlohmann::json())) || !is_line_id(p.value("b", nlohmann::json())))
        return "pair ids malformed";
      if (!p["sim"].is_number()) return "sim not numeric";
      if (!p["bin"].is_string()) return "bin not a string";
      if (!(p["span"].is_null() || (p["span"].is_array() && p["span"].size() == 2))) return "span malformed";
    }
  }
  return {};
}

// Recursive scan for keys that must never appear anywhere in a payload.
inline bool mentions_forbidden_key(const nlohmann::json& j) {
  static const std::set<std::string> forbidden = {"iteration", "config", "config_hash", "timestamp", "seed",
                                                  "before", "after", "type"};
  if (j.is_object()) {
    for (const auto& [k, v] : j.items())
      if (forbidden.count(k) || mentions_forbidden_key(v)) return true;
  } else if (j.is_array()) {
    for (const auto& v : j)
      if (mentions_forbidden_key(v)) return true;
  }
  return false;
}

}  // namespace schema
