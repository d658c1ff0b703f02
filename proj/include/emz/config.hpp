#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "emz/basis.hpp"
#include "emz/chain_spec.hpp"
#include "emz/sim.hpp"

namespace emz {

// One documented configuration key ("section.name").
struct ConfigKey {
  std::string key;
  std::string default_value;
  std::string help;
};

// Full schema; keys outside it are rejected.
const std::vector<ConfigKey>& config_schema();

// Sectioned key=value configuration (INI syntax, '#' or ';' comments).
// Values are kept as text and typed on access; a malformed value raises
// ConfigError naming the key.
class Config {
 public:
  Config();

  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  // "section.name=value"
  void apply_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool is_set(const std::string& key) const;  // given by file or override
  std::string get(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_strings(const std::string& key) const;

  // Every schema key with its resolved value.
  nlohmann::json resolved() const;

  ChainSpec chain_spec() const;
  EnsembleSpec ensemble() const;
  std::vector<Observable> observables() const;
  // [basis] section; sigma may be "auto", in which case the returned sigma is 0.
  BasisSpec basis() const;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> explicit_;
};

}  // namespace emz
