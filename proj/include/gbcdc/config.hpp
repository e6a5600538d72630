#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "gbcdc/simulate.hpp"

namespace gbcdc {

/// A parsed configuration value: scalar or homogeneous array.
using ConfigValue = std::variant<bool, std::int64_t, double, std::string, std::vector<std::int64_t>,
                                 std::vector<double>, std::vector<std::string>>;

using ConfigMap = std::map<std::string, ConfigValue>;

/// Parses flat `key = value` TOML (strings, integers, floats, booleans and
/// one-dimensional arrays; # comments). Table headers are rejected: the
/// experiment schema is flat by design.
ConfigMap parse_toml(const std::string& text, const std::string& origin);

/// Parses a flat JSON object into the same map.
ConfigMap parse_json_config(const std::string& text, const std::string& origin);

/// Reads a config file, dispatching on a leading '{' (JSON) versus TOML.
ConfigMap load_config_file(const std::string& path);

/// Applies `key=value` override strings (same value grammar as TOML).
void apply_overrides(ConfigMap& map, const std::vector<std::string>& overrides);

/// Converts the map into a validated ExperimentConfig. Unknown keys and
/// schema_version values other than 1 raise ConfigError naming the key.
ExperimentConfig experiment_config_from_map(const ConfigMap& map);

}  // namespace gbcdc
