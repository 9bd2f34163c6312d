#include "kineq/toml_lite.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kineq/errors.hpp"

namespace kineq::toml_lite {

bool Value::as_bool() const {
  if (!is_bool()) throw ValidationError("TOML value is not a boolean");
  return std::get<bool>(data);
}

std::int64_t Value::as_int() const {
  if (!is_int()) throw ValidationError("TOML value is not an integer");
  return std::get<std::int64_t>(data);
}

double Value::as_double() const {
  if (is_int()) return static_cast<double>(std::get<std::int64_t>(data));
  if (!is_float()) throw ValidationError("TOML value is not a number");
  return std::get<double>(data);
}

const std::string& Value::as_string() const {
  if (!is_string()) throw ValidationError("TOML value is not a string");
  return std::get<std::string>(data);
}

const Array& Value::as_array() const {
  if (!is_array()) throw ValidationError("TOML value is not an array");
  return std::get<Array>(data);
}

namespace {

[[noreturn]] void fail(int line, const std::string& message) {
  throw ValidationError("TOML line " + std::to_string(line) + ": " + message);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::string_view strip_comment(std::string_view s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

bool valid_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
      return false;
    }
  }
  return true;
}

Value parse_scalar(std::string_view token, int line);

Value parse_value(std::string_view token, int line) {
  token = trim(token);
  if (token.empty()) fail(line, "missing value");
  if (token.front() == '[') {
    if (token.back() != ']') fail(line, "unterminated array");
    Array items;
    std::string_view inner = token.substr(1, token.size() - 2);
    std::size_t start = 0;
    bool in_string = false;
    int depth = 0;
    for (std::size_t i = 0; i <= inner.size(); ++i) {
      const bool at_end = i == inner.size();
      const char c = at_end ? ',' : inner[i];
      if (!at_end && c == '"') in_string = !in_string;
      if (!at_end && !in_string && c == '[') ++depth;
      if (!at_end && !in_string && c == ']') --depth;
      if (c == ',' && !in_string && depth == 0) {
        const auto piece = trim(inner.substr(start, i - start));
        if (!piece.empty()) items.push_back(parse_value(piece, line));
        start = i + 1;
      }
    }
    return Value{std::move(items)};
  }
  return parse_scalar(token, line);
}

Value parse_scalar(std::string_view token, int line) {
  if (token.front() == '"') {
    if (token.size() < 2 || token.back() != '"') fail(line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < token.size(); ++i) {
      if (token[i] == '\\' && i + 2 < token.size()) {
        ++i;
        switch (token[i]) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: fail(line, "unsupported escape sequence");
        }
      } else {
        out.push_back(token[i]);
      }
    }
    return Value{std::move(out)};
  }
  if (token == "true") return Value{true};
  if (token == "false") return Value{false};

  const std::string text(token);
  bool integral = !text.empty();
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (i == 0 && (c == '+' || c == '-')) continue;
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      integral = false;
      break;
    }
  }
  if (integral) {
    try {
      return Value{static_cast<std::int64_t>(std::stoll(text))};
    } catch (const std::exception&) {
      fail(line, "integer out of range: " + text);
    }
  }
  std::size_t consumed = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &consumed);
  } catch (const std::exception&) {
    fail(line, "cannot parse value: " + text);
  }
  if (consumed != text.size() || !std::isfinite(v)) {
    fail(line, "cannot parse value: " + text);
  }
  return Value{v};
}

}  // namespace

Document parse(const std::string& text) {
  Document doc;
  std::string section;
  doc[section] = {};
  std::istringstream stream(text);
  std::string raw;
  int line = 0;
  while (std::getline(stream, raw)) {
    ++line;
    const auto content = trim(strip_comment(raw));
    if (content.empty()) continue;
    if (content.front() == '[') {
      if (content.back() != ']') fail(line, "unterminated section header");
      const auto name = trim(content.substr(1, content.size() - 2));
      if (!valid_key(name)) fail(line, "invalid section name");
      section = std::string(name);
      doc[section];
      continue;
    }
    const auto eq = content.find('=');
    if (eq == std::string_view::npos) fail(line, "expected key = value");
    const auto key = trim(content.substr(0, eq));
    if (!valid_key(key)) fail(line, "invalid key '" + std::string(key) + "'");
    if (doc[section].count(std::string(key))) {
      fail(line, "duplicate key '" + std::string(key) + "'");
    }
    doc[section][std::string(key)] = parse_value(content.substr(eq + 1), line);
  }
  if (doc[""].empty()) doc.erase("");
  return doc;
}

Document parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

namespace {

void serialize_value(std::ostringstream& os, const Value& v) {
  if (v.is_bool()) {
    os << (v.as_bool() ? "true" : "false");
  } else if (v.is_int()) {
    os << v.as_int();
  } else if (v.is_float()) {
    os.precision(17);
    os << v.as_double();
  } else if (v.is_string()) {
    os << '"';
    for (char c : v.as_string()) {
      if (c == '"' || c == '\\') os << '\\';
      os << c;
    }
    os << '"';
  } else {
    os << '[';
    const auto& arr = v.as_array();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (i) os << ", ";
      serialize_value(os, arr[i]);
    }
    os << ']';
  }
}

}  // namespace

std::string serialize(const Document& doc) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [section, table] : doc) {
    if (!first) os << "\n";
    first = false;
    if (!section.empty()) os << "[" << section << "]\n";
    for (const auto& [key, value] : table) {
      os << key << " = ";
      serialize_value(os, value);
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace kineq::toml_lite
