#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "multiridge/errors.hpp"

namespace multiridge {

/// Minimal INI-style config: [section] headers, key = value lines, `#` or
/// `;` comments. Values are kept as strings and converted on access;
/// experiment runners fill in defaults for anything missing so a bare file
/// (or none at all) runs the desk-scale setup.
class IniConfig {
 public:
  IniConfig() = default;

  static IniConfig parse(std::istream& in) {
    IniConfig cfg;
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string stripped = strip_comment(line);
      const std::string trimmed = trim(stripped);
      if (trimmed.empty()) continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']' || trimmed.size() < 3) {
          throw InvalidInputError("config line " + std::to_string(line_no) +
                                  ": malformed section header");
        }
        section = trim(trimmed.substr(1, trimmed.size() - 2));
        continue;
      }
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw InvalidInputError("config line " + std::to_string(line_no) +
                                ": expected key = value");
      }
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) {
        throw InvalidInputError("config line " + std::to_string(line_no) + ": empty key");
      }
      cfg.values_[section][key] = value;
    }
    return cfg;
  }

  static IniConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open config file: " + path);
    return parse(in);
  }

  static IniConfig parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = values_.find(section);
    return s != values_.end() && s->second.count(key) > 0;
  }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    values_[section][key] = value;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    auto s = values_.find(section);
    if (s == values_.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) const {
    if (!has(section, key)) return fallback;
    return to_double(section, key, get_string(section, key, ""));
  }

  long long get_int(const std::string& section, const std::string& key, long long fallback) const {
    if (!has(section, key)) return fallback;
    const std::string raw = get_string(section, key, "");
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      throw InvalidInputError("config [" + section + "] " + key + ": not an integer: " + raw);
    }
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string raw = get_string(section, key, "");
    if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
    if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
    throw InvalidInputError("config [" + section + "] " + key + ": not a boolean: " + raw);
  }

  std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                      const std::vector<double>& fallback) const {
    if (!has(section, key)) return fallback;
    std::vector<double> out;
    for (const auto& item : split_list(get_string(section, key, ""))) {
      out.push_back(to_double(section, key, item));
    }
    return out;
  }

  std::vector<std::string> get_string_list(const std::string& section, const std::string& key,
                                           const std::vector<std::string>& fallback) const {
    if (!has(section, key)) return fallback;
    return split_list(get_string(section, key, ""));
  }

  /// Snapshot for embedding into result records.
  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [section, kv] : values_) {
      nlohmann::json s = nlohmann::json::object();
      for (const auto& [key, value] : kv) s[key] = value;
      j[section.empty() ? "(top)" : section] = std::move(s);
    }
    return j;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
  }

  static std::string strip_comment(const std::string& s) {
    const auto pos = s.find_first_of("#;");
    return pos == std::string::npos ? s : s.substr(0, pos);
  }

  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
      const std::string t = trim(item);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }

  double to_double(const std::string& section, const std::string& key,
                   const std::string& raw) const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      throw InvalidInputError("config [" + section + "] " + key + ": not a number: " + raw);
    }
  }

  std::map<std::string, std::map<std::string, std::string>> values_;
};

}  // namespace multiridge
