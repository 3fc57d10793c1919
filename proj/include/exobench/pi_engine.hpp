#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "exobench/biosignal.hpp"

namespace exobench {

inline constexpr std::array<std::string_view, 6> kPiInputs{"HR", "RMSSD", "RR", "SCR", "SCL", "LF"};
inline constexpr std::array<std::string_view, 4> kPiOutputs{"stress", "energy", "attention", "fatigue"};

/// WALK-to-SIT feature ratios for one WALK window, in kPiInputs order. An
/// empty entry means the window or the baseline had no usable value.
struct NormalizedInputs {
  double start = 0.0;
  double stop = 0.0;
  std::array<std::optional<double>, 6> ratio;

  nlohmann::json to_json() const;
  static NormalizedInputs from_json(const nlohmann::json& j);
};

/// Divides each of the last `last_n` WALK windows by the SIT mean of the same
/// feature (HR, RMSSD, RR, SCR rate, SCL, LF fraction). Needs at least
/// `last_n` WALK windows and one SIT window.
std::vector<NormalizedInputs> normalize(std::span<const FeatureWindow> walk, std::span<const FeatureWindow> sit,
                                        std::size_t last_n = 5);

enum class Level { Low, Medium, High };
std::string_view to_string(Level l);
Level level_from(std::string_view s);

struct Triangle {
  double left = 0.0, peak = 0.0, right = 0.0;
  double operator()(double x) const;
};

struct FuzzyVariable {
  std::string name;
  double lo = 0.0, hi = 1.0;
  std::array<std::optional<Triangle>, 3> sets;  // low, medium, high
};

struct Rule {
  struct Term {
    std::string variable;
    Level level = Level::Medium;
  };
  std::vector<Term> when;  // conjunction
  Term then;
};

/// Mamdani model: triangular sets, min for AND, max aggregation, centroid
/// defuzzification on a 2001-point grid.
struct FuzzyModel {
  static constexpr int kSchemaVersion = 1;
  static constexpr int kGrid = 2001;

  std::vector<FuzzyVariable> inputs, outputs;
  std::vector<Rule> rules;

  /// Ratio inputs on [0, 3] and outputs on [0, 1], with trend rules per PI.
  static FuzzyModel default_model();

  /// Throws Validation naming the variable: coverage gaps, unordered peaks,
  /// malformed triangles, unknown or missing variables, dangling rule terms.
  void validate() const;

  nlohmann::json to_json() const;
  static FuzzyModel from_json(const nlohmann::json& j);
  static FuzzyModel load(const std::filesystem::path& path);
};

struct PIScores {
  std::array<double, 4> value{0.5, 0.5, 0.5, 0.5};
  /// True when no rule fired or a rule for that PI needed a missing input.
  std::array<bool, 4> degraded{};

  nlohmann::json to_json() const;
  static PIScores from_json(const nlohmann::json& j);
};

/// Inputs are clamped to their variable range before fuzzification.
PIScores infer(const FuzzyModel& model, const NormalizedInputs& inputs);

}  // namespace exobench
