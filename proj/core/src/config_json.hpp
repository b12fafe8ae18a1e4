#pragma once

// Internal: JSON views of library types shared by config.cpp and report.cpp.

#include <nlohmann/json.hpp>

#include "leap/config.hpp"

namespace leap::detail {

nlohmann::json config_to_json(const ExperimentConfig& cfg);

}  // namespace leap::detail
