#pragma once

#include <map>
#include <string>
#include <vector>

#include "drivecot/errors.hpp"

namespace drivecot::toml {

// Reader for the TOML subset the config files use: [table] headers, flat
// `key = value` pairs with string / integer / float / boolean values, and
// `#` comments. Keys are exposed flattened as "table.key".
class Table {
 public:
  static Table parse(const std::string& text);
  static Table parse_file(const std::string& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::vector<std::string> keys() const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

 private:
  struct Value {
    enum class Kind { String, Integer, Float, Boolean };
    Kind kind{Kind::String};
    std::string text;
    long long integer{0};
    double real{0.0};
    bool boolean{false};
  };

  const Value& require(const std::string& key) const;

  std::map<std::string, Value> values_;
};

}  // namespace drivecot::toml
