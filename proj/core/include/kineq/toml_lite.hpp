#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace kineq::toml_lite {

// Minimal TOML subset: [section] headers, key = value with strings,
// integers, floats, booleans and flat arrays, # comments. Enough for
// scenario files; no nested tables or multi-line values.

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<bool, std::int64_t, double, std::string, Array> data;

  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
  bool is_float() const { return std::holds_alternative<double>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_array() const { return std::holds_alternative<Array>(data); }

  bool as_bool() const;
  std::int64_t as_int() const;
  double as_double() const;  // accepts integers
  const std::string& as_string() const;
  const Array& as_array() const;
};

using Table = std::map<std::string, Value>;
using Document = std::map<std::string, Table>;  // "" holds root-level keys

Document parse(const std::string& text);
Document parse_file(const std::string& path);

/// Canonical text form (sorted sections and keys); used for the config echo
/// embedded in reports so reruns compare byte-identical.
std::string serialize(const Document& doc);

}  // namespace kineq::toml_lite
