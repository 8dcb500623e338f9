#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cabps {

/// Malformed configuration. `line` is 0 when the problem is not tied to a
/// line (e.g. a command-line override).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& key,
              const std::string& what);
  int line() const { return line_; }
  const std::string& key() const { return key_; }

 private:
  int line_;
  std::string key_;
};

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string description;
};

/// Every recognised key. `sampler.<kind>.<field>` overrides are listed with
/// a literal `<kind>` placeholder.
const std::vector<ConfigKey>& config_keys();

/// Flat `key = value` configuration with `#` comments.
class Config {
 public:
  static Config parse(std::istream& in, const std::string& source = "<config>");
  static Config load(const std::string& path);
  static bool is_known_key(const std::string& key);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<std::string> get_strings(
      const std::string& key, const std::vector<std::string>& fallback) const;

  /// Resolved `key = value` lines in key order.
  std::string echo() const;

  /// Throws a ConfigError pointing at the line that set `key`.
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };

  std::string source_ = "<config>";
  std::map<std::string, Entry> entries_;
};

}  // namespace cabps
