#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fpedge/harness.hpp"

namespace fpedge {

enum class KeyType { string, integer, number, number_array, integer_array };

struct ConfigKey {
  std::string name;
  KeyType type;
  std::string help;
};

/// Every accepted flat config key.
const std::vector<ConfigKey>& config_keys();

/// Command names with one-line descriptions.
const std::vector<std::pair<std::string, std::string>>& commands();

struct RunConfig {
  std::string command;
  std::string output_dir = "fpedge_out";
  ExperimentConfig experiment;
  double tol = 1e-12;
  int max_iter = 100000;
  std::optional<double> grid_lo;
  std::optional<double> grid_hi;
  std::size_t grid_points = 401;
  std::vector<double> eta{1e-4, 5e-5};
  double tw_lo = -8.0;
  double tw_hi = 6.0;
  double tw_step = 0.05;
  std::size_t sample_k = 10;
  std::size_t decompose_n = 64;
  std::size_t decompose_pairs = 50;
};

/// Nested objects become dotted keys: {"a": {"b": 1}} -> {"a.b": 1}.
nlohmann::json flatten(const nlohmann::json& j);

/// Reads a JSON config file and flattens it. Throws ConfigError.
nlohmann::json load_config_file(const std::string& path);

/// Parses a command-line override for `key`. Arrays are comma separated.
nlohmann::json parse_value(const ConfigKey& key, const std::string& text);

/// Applies command defaults, then the flat settings, then validates.
/// Unknown keys and ill-typed values raise ConfigError.
RunConfig resolve_config(const nlohmann::json& flat);

/// Text listing commands and keys.
std::string usage_text();

}  // namespace fpedge
