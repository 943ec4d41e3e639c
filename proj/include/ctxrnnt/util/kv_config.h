// ctxrnnt/util/kv_config.h
//
// Flat `key = value` configuration files. Lines starting with '#' and blank
// lines are ignored. Later assignments (including overrides) win.

#ifndef CTXRNNT_UTIL_KV_CONFIG_H_
#define CTXRNNT_UTIL_KV_CONFIG_H_

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ctxrnnt {

class KvConfig {
 public:
  static KvConfig Parse(const std::string& text, const std::string& origin = "<string>");
  static KvConfig Load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  // Applies "key=value" strings; throws ValidationError if malformed.
  void apply_overrides(const std::vector<std::string>& overrides);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> find(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Throws ValidationError listing every key not in `known`.
  void check_known(const std::set<std::string>& known) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string to_string() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace ctxrnnt

#endif  // CTXRNNT_UTIL_KV_CONFIG_H_
