#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "armforge/model.hpp"

namespace armforge {

// Parses a JSON arm description. Absent keys fall back to default_arm_model();
// lists that are present must have their full length, and each entry's absent
// fields default to the entry at the same position. Throws ConfigError with
// line/column context on parse failures and the first violated rule otherwise.
ArmModel load_arm_config(std::string_view text);
ArmModel load_arm_config_file(const std::filesystem::path& path);

// Complete document with every field spelled out.
nlohmann::json arm_model_to_json(const ArmModel& m);
std::string serialize_arm_model(const ArmModel& m);

// Merges a JSON value over `base`; shared by config files and scenarios.
ArmModel apply_arm_overrides(const nlohmann::json& doc, ArmModel base);

// "line L, column C" for a byte offset into `text`.
std::string describe_offset(std::string_view text, std::size_t byte_offset);

}  // namespace armforge
