#pragma once

#include <string>

#include "rsfl/sim.hpp"

namespace rsfl {

// Stable-key-order JSON document; byte-identical for identical reports.
std::string report_to_json(const RoundReport& report);

// Versioned scenario document ("schema": "fsl-scenario/1"). Unknown keys
// anywhere in the tree raise ConfigError naming the offending path.
ScenarioConfig scenario_from_json(const std::string& text);
ScenarioConfig scenario_from_file(const std::string& path);

std::string scenario_to_json(const ScenarioConfig& cfg);

}  // namespace rsfl
