#pragma once

// JSON form of an Instance:
//   {"d": int, "S": float, "L": float, "zero_sum": bool,
//    "theta_star": [float], "features": [[[float]]]}   (contexts x actions x d)
// Key order is free; unknown keys are rejected.

#include <filesystem>
#include <string>

#include "apo/model.hpp"

namespace apo {

std::string instance_to_json(const Instance& inst);
// Throws ConfigError naming the offending field, or InvalidInstance.
Instance instance_from_json(const std::string& text);

Instance load_instance(const std::filesystem::path& path);
void save_instance(const Instance& inst, const std::filesystem::path& path);

}  // namespace apo
