#include "locosel/config.hpp"

#include "locosel/common.hpp"

namespace locosel {

KeyValueConfig KeyValueConfig::parse(std::string_view text, const std::string& origin) {
  KeyValueConfig cfg;
  std::size_t line_no = 0;
  for (std::string_view raw : split(text, '\n')) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw Error(Errc::ConfigInvalid,
                  origin + ":" + std::to_string(line_no) + ": expected key=value");
    cfg.entries_[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  return parse(read_file(path), path);
}

void KeyValueConfig::merge(const KeyValueConfig& other) {
  for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

std::optional<std::string> KeyValueConfig::find(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(Errc::ConfigInvalid, "missing key '" + key + "'");
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    return parse_double(v);
  } catch (const Error&) {
    throw Error(Errc::ConfigInvalid, "key '" + key + "' is not a number: '" + v + "'");
  }
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long KeyValueConfig::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    return parse_int(v);
  } catch (const Error&) {
    throw Error(Errc::ConfigInvalid, "key '" + key + "' is not an integer: '" + v + "'");
  }
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::vector<std::string> KeyValueConfig::sections(const std::string& prefix) const {
  std::vector<std::string> out;
  const std::string head = prefix + ".";
  for (auto it = entries_.lower_bound(head); it != entries_.end(); ++it) {
    if (it->first.compare(0, head.size(), head) != 0) break;
    const std::string rest = it->first.substr(head.size());
    const auto dot = rest.find('.');
    const std::string name = rest.substr(0, dot);
    if (out.empty() || out.back() != name) out.push_back(name);
  }
  return out;
}

std::string KeyValueConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

}  // namespace locosel
