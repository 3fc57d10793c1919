#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "exobench/biosignal.hpp"
#include "exobench/eq_scoring.hpp"
#include "exobench/gait_sim.hpp"
#include "exobench/physio_session.hpp"
#include "exobench/pi_engine.hpp"

namespace exobench {

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

struct PsychophysiologicalSection {
  std::vector<NormalizedInputs> inputs;  // last WALK windows
  std::vector<PIScores> scores;          // one per input row
  PIScores mean;                         // degraded if any row was
};

/// Everything `analyze` produces for one session. Absent sections carry the
/// reason in `skipped`.
struct BenchmarkReport {
  static constexpr int kSchemaVersion = 1;

  std::string subject;
  std::map<std::string, std::string> inputs;  // file -> FNV-1a digest
  std::optional<std::vector<FeatureWindow>> physiological;
  std::optional<PsychophysiologicalSection> psychophysiological;
  std::optional<FactorReport> questionnaire;
  std::optional<ReplayReport> controller;
  std::map<std::string, std::string> skipped;

  /// Invalid feature values plus degraded PI scores.
  std::size_t invalid_flags() const;

  nlohmann::json to_json() const;
  static BenchmarkReport from_json(const nlohmann::json& j);
  /// Pretty-printed JSON with a trailing newline.
  std::string dump() const;
};

struct BatchReport {
  std::vector<BenchmarkReport> sessions;
  std::map<std::string, FactorStats> questionnaire;

  nlohmann::json to_json() const;
  static BatchReport from_json(const nlohmann::json& j);
  std::string dump() const;
};

struct AnalysisConfig {
  FuzzyModel fuzzy = FuzzyModel::default_model();
  EqDefinition questionnaire = EqDefinition::synthetic_default();
  WindowConfig windows;
  std::size_t last_walk_windows = 5;
};

BenchmarkReport analyze_session(const ProtocolSession& session, const AnalysisConfig& cfg = {});

/// Analyzes `dir` itself when it holds a manifest, otherwise every
/// subdirectory that does, in name order.
BatchReport analyze_tree(const std::filesystem::path& dir, bool lenient, const AnalysisConfig& cfg = {});

}  // namespace exobench
