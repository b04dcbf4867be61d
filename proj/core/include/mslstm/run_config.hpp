#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mslstm {

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// `key = value` per line; '#' starts a comment; blank lines are skipped.
/// Throws format_error naming `source` and the line for anything else.
std::vector<KeyValue> parse_key_values(std::string_view text, const std::string& source);

/// Settings of one command: a fixed key set with defaults, overridden first by
/// a config file and then by explicit flags.
class RunConfig {
 public:
  RunConfig() = default;
  explicit RunConfig(std::map<std::string, std::string> defaults);

  // config_error naming the first unknown key.
  void merge_file(const std::filesystem::path& path);
  void merge_text(std::string_view text, const std::string& source);
  void set(const std::string& key, std::string value);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  // config_error when the value does not parse.
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;  // comma-separated
  std::vector<std::string> get_list(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  // Sorted `key = value` lines; feeding them back reproduces the config.
  std::string echo() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace mslstm
