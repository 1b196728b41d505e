#include "drivecot/toml_lite.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace drivecot::toml {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Removes a trailing comment, respecting double-quoted strings.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

std::string unescape(const std::string& s, std::size_t line_no) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out.push_back(s[i]);
      continue;
    }
    if (i + 1 >= s.size())
      throw ConfigError("dangling escape on line " + std::to_string(line_no));
    const char next = s[++i];
    switch (next) {
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case '"': out.push_back('"'); break;
      case '\\': out.push_back('\\'); break;
      default:
        throw ConfigError("unsupported escape \\" + std::string(1, next) + " on line " +
                          std::to_string(line_no));
    }
  }
  return out;
}

}  // namespace

Table Table::parse(const std::string& text) {
  Table table;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("unterminated table header on line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("empty table header on line " + std::to_string(line_no));
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value on line " + std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value_text = trim(line.substr(eq + 1));
    if (key.empty() || value_text.empty())
      throw ConfigError("malformed key = value on line " + std::to_string(line_no));

    Value value;
    if (value_text.front() == '"') {
      if (value_text.size() < 2 || value_text.back() != '"')
        throw ConfigError("unterminated string on line " + std::to_string(line_no));
      value.kind = Value::Kind::String;
      value.text = unescape(value_text.substr(1, value_text.size() - 2), line_no);
    } else if (value_text == "true" || value_text == "false") {
      value.kind = Value::Kind::Boolean;
      value.boolean = value_text == "true";
    } else {
      const char* begin = value_text.c_str();
      char* end = nullptr;
      if (value_text.find_first_of(".eE") == std::string::npos) {
        value.integer = std::strtoll(begin, &end, 10);
        value.kind = Value::Kind::Integer;
        value.real = static_cast<double>(value.integer);
      } else {
        value.real = std::strtod(begin, &end);
        value.kind = Value::Kind::Float;
      }
      if (end != begin + value_text.size())
        throw ConfigError("cannot parse value `" + value_text + "` on line " +
                          std::to_string(line_no));
    }

    const std::string full_key = section.empty() ? key : section + "." + key;
    if (table.values_.count(full_key))
      throw ConfigError("duplicate key " + full_key + " on line " + std::to_string(line_no));
    table.values_.emplace(full_key, std::move(value));
  }
  return table;
}

Table Table::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str());
}

std::vector<std::string> Table::keys() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [key, _] : values_) out.push_back(key);
  return out;
}

const Table::Value& Table::require(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

std::string Table::get_string(const std::string& key) const {
  const Value& v = require(key);
  if (v.kind != Value::Kind::String) throw ConfigError("config key " + key + " must be a string");
  return v.text;
}

std::string Table::get_string(const std::string& key, const std::string& fallback) const {
  return contains(key) ? get_string(key) : fallback;
}

long long Table::get_int(const std::string& key, long long fallback) const {
  if (!contains(key)) return fallback;
  const Value& v = require(key);
  if (v.kind != Value::Kind::Integer)
    throw ConfigError("config key " + key + " must be an integer");
  return v.integer;
}

double Table::get_double(const std::string& key, double fallback) const {
  if (!contains(key)) return fallback;
  const Value& v = require(key);
  if (v.kind != Value::Kind::Integer && v.kind != Value::Kind::Float)
    throw ConfigError("config key " + key + " must be a number");
  return v.real;
}

bool Table::get_bool(const std::string& key, bool fallback) const {
  if (!contains(key)) return fallback;
  const Value& v = require(key);
  if (v.kind != Value::Kind::Boolean)
    throw ConfigError("config key " + key + " must be a boolean");
  return v.boolean;
}

}  // namespace drivecot::toml
