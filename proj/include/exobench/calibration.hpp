#pragma once

#include <filesystem>

#include <json.hpp>

#include "exobench/exo_model.hpp"

namespace exobench {

/// Link parameters and friction/ripple tables, as stored in a calibration file.
struct Calibration {
  static constexpr int kSchemaVersion = 1;

  ExoParams params;
  FrictionRippleTables tables = FrictionRippleTables::synthetic_default();
};

nlohmann::json to_json(const Calibration& cal);
/// Throws Validation on schema mismatch, missing tables or bad parameters.
Calibration calibration_from_json(const nlohmann::json& j);
Calibration load_calibration(const std::filesystem::path& path);

}  // namespace exobench
