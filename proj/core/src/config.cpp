#include "pfm/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "pfm/error.hpp"

namespace pfm {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::Parse, "config key '" + key + "': '" + text + "' is not a number");
  }
  return value;
}

}  // namespace

Config Config::parse(std::string_view text, std::string_view origin) {
  Config config;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string_view key = eq == std::string_view::npos ? std::string_view{} : trim(line.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorKind::Parse, std::string(origin) + ":" + std::to_string(line_no) + ": expected key=value");
    }
    config.values_[std::string(key)] = std::string(trim(line.substr(eq + 1)));
  }
  return config;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Load, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int Config::get_int(const std::string& key, int fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_number<int>(key, it->second);
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_number<double>(key, it->second);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error(ErrorKind::Parse, "config key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> items;
  const auto it = values_.find(key);
  if (it == values_.end()) return items;
  std::string_view rest = it->second;
  while (true) {
    const auto comma = rest.find(',');
    const auto item = trim(rest.substr(0, comma));
    if (!item.empty()) items.emplace_back(item);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return items;
}

std::vector<int> Config::get_int_list(const std::string& key, std::vector<int> fallback) const {
  if (!has(key)) return fallback;
  std::vector<int> out;
  for (const auto& item : get_list(key)) out.push_back(parse_number<int>(key, item));
  return out;
}

std::string Config::format() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

}  // namespace pfm
