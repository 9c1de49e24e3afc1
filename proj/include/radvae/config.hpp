#pragma once

// Flat INI configuration with one section per pipeline stage plus a
// [common] section. Lookup order: flag override, [stage], [common], default.

#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "radvae/rng.hpp"

namespace radvae {

struct MissingConfigKey : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path) {
    Config c;
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError("cannot read config '" + path + "': " + e.message());
    }
    for (const auto& [section, body] : tree) {
      if (body.empty()) {
        c.values_["common"][section] = body.data();
        continue;
      }
      for (const auto& [key, v] : body) c.values_[section][key] = v.data();
    }
    c.source_ = path;
    return c;
  }

  void set_stage(std::string stage) { stage_ = std::move(stage); }
  const std::string& stage() const noexcept { return stage_; }
  void override_value(const std::string& key, std::string value) { overrides_[key] = std::move(value); }

  std::optional<std::string> find(const std::string& key) const {
    if (auto it = overrides_.find(key); it != overrides_.end()) return it->second;
    for (const char* sec : {stage_.c_str(), "common"}) {
      auto s = values_.find(sec);
      if (s == values_.end()) continue;
      if (auto it = s->second.find(key); it != s->second.end()) return it->second;
    }
    return std::nullopt;
  }

  std::string require(const std::string& key) const {
    auto v = find(key);
    if (!v)
      throw MissingConfigKey("missing configuration key '" + key + "' for stage '" + stage_ +
                             "' (set it in the config file or pass --" + key + ")");
    used_[key] = *v;
    return *v;
  }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto v = find(key);
    used_[key] = v ? *v : fallback;
    return used_[key];
  }

  double get_double(const std::string& key, std::optional<double> fallback = {}) const {
    return parse_double(key, fallback && !find(key) ? record(key, *fallback) : require(key));
  }
  std::uint64_t get_u64(const std::string& key, std::optional<std::uint64_t> fallback = {}) const {
    return parse_u64(key, fallback && !find(key) ? record(key, *fallback) : require(key));
  }

  std::vector<double> get_doubles(const std::string& key,
                                  std::optional<std::string> fallback = {}) const {
    const std::string s = fallback && !find(key) ? get(key, *fallback) : require(key);
    return parse_list(key, s);
  }

  /// Hash of every key consulted so far with its effective value.
  std::uint64_t hash() const {
    std::string canon;
    for (const auto& [k, v] : used_) canon += k + "=" + v + "\n";
    return fnv1a(canon);
  }

  std::string hash_hex() const {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
  }

  static std::vector<double> parse_list(const std::string& key, const std::string& s) {
    // "a,b,c" or a range "lo:step:hi"
    std::vector<double> out;
    if (s.find(':') != std::string::npos) {
      std::vector<double> parts;
      std::stringstream ss(s);
      std::string item;
      while (std::getline(ss, item, ':')) parts.push_back(parse_double(key, item));
      if (parts.size() != 3 || !(parts[1] > 0.0) || parts[2] < parts[0])
        throw ConfigError("key '" + key + "': range must be lo:step:hi with step > 0");
      const auto n = static_cast<std::size_t>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9));
      for (std::size_t i = 0; i <= n; ++i) out.push_back(parts[0] + parts[1] * static_cast<double>(i));
      return out;
    }
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
      if (item.find_first_not_of(" \t") != std::string::npos) out.push_back(parse_double(key, item));
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
  }

  static double parse_double(const std::string& key, const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (s.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': '" + s + "' is not a number");
    }
  }

  static std::uint64_t parse_u64(const std::string& key, const std::string& s) {
    try {
      std::size_t pos = 0;
      if (s.find('-') != std::string::npos) throw std::invalid_argument(s);
      const auto v = std::stoull(s, &pos, 0);
      if (s.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': '" + s + "' is not a non-negative integer");
    }
  }

 private:
  template <class T>
  std::string record(const std::string& key, T v) const {
    std::ostringstream os;
    os.precision(17);
    os << v;
    used_[key] = os.str();
    return used_[key];
  }

  std::map<std::string, std::map<std::string, std::string>> values_;
  std::map<std::string, std::string> overrides_;
  mutable std::map<std::string, std::string> used_;
  std::string stage_ = "common";
  std::string source_;
};

}  // namespace radvae
