#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace locosel {

/// Line-oriented `key=value` configuration. `#` starts a comment line.
/// Later assignments override earlier ones, so configs can be layered.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text, const std::string& origin = "<config>");
  static KeyValueConfig load(const std::string& path);

  void merge(const KeyValueConfig& other);
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::optional<std::string> find(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;

  /// Distinct second components of keys `prefix.<name>.*`, in key order.
  std::vector<std::string> sections(const std::string& prefix) const;

  /// Canonical serialization (sorted keys); stable input to config hashes.
  std::string to_text() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace locosel
