#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "v2vdep/scenario.hpp"

namespace v2vdep {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reads the flat key-value scenario format (see configs/table1.ini and the
// README schema table). Power values require an explicit unit suffix
// ("27 dBm" or "0.5 W"); delays accept plain seconds or an s/ms/us suffix.
// The returned config is fully converted to linear units; callers still run
// validate() on it.
ScenarioConfig parse_config(std::istream& in);
ScenarioConfig load_config(const std::string& path);

// Resolved config as ordered key/value pairs, linear units, for report
// headers. Contains every field the parser accepts.
std::vector<std::pair<std::string, std::string>> config_echo(const ScenarioConfig& config);

}  // namespace v2vdep
