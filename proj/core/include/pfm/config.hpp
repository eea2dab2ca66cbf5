#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace pfm {

/// Line-oriented `key = value` settings with namespaced keys (`flow.levels`, `svm.c`).
/// `#` starts a comment; later assignments override earlier ones.
class Config {
 public:
  static Config parse(std::string_view text, std::string_view origin = "config");
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated items with surrounding spaces trimmed.
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const;

  /// Sorted `key=value` lines.
  std::string format() const;
  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace pfm
