#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "rhsim/scenario.hpp"

namespace rhsim {

/// Shortest decimal text that round-trips to the same double.
std::string format_double_exact(double v);

/// Sectioned `key = value` text: [scenario] [recognition] [mobility] [hybrid]
/// [output]. Includes the materialized population (community/channel/node/
/// item/popularity entries) so a run is reproducible from the file alone.
std::string serialize_scenario(const Scenario& s);

/// Only the configuration keys, no population.
std::string serialize_config(const ScenarioConfig& c);

/// Parses a scenario or configuration text. A text without population entries
/// is expanded with generate_scenario(config, config.seed). Unknown sections or
/// keys, malformed values and incomplete populations raise ScenarioError naming
/// the offending line.
Scenario parse_scenario(std::string_view text);

/// Configuration keys only; population entries are rejected.
ScenarioConfig parse_config(std::string_view text);

Scenario load_scenario_file(const std::string& path);
void save_scenario_file(const Scenario& s, const std::string& path);

/// 64-bit FNV-1a of a byte string.
std::uint64_t fnv1a64(std::string_view bytes);

/// Hash of the serialized scenario; changes iff any serialized byte changes.
std::uint64_t scenario_hash(const Scenario& s);

}  // namespace rhsim
