#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace exobench {

/// Uniformly sampled channel starting at t0 (s).
struct UniformChannel {
  double rate_hz = 0.0;
  double t0 = 0.0;
  Eigen::VectorXd values;

  double end_time() const { return t0 + double(values.size()) / rate_hz; }
  /// Samples with timestamps in [start, stop).
  Eigen::VectorXd slice(double start, double stop) const;
  Eigen::Index index_of(double t) const;
};

enum class Phase { Sit, SitExo, Walk };
inline constexpr std::array<Phase, 3> kPhases{Phase::Sit, Phase::SitExo, Phase::Walk};
std::string_view to_string(Phase p);

struct PhaseInterval {
  double start = 0.0;
  double stop = 0.0;
  double duration() const { return stop - start; }
  bool contains(double a, double b) const { return a >= start - 1e-9 && b <= stop + 1e-9; }
};

struct PhaseMarkers {
  static constexpr double kSitDuration = 240.0;
  static constexpr double kWalkDuration = 960.0;
  static constexpr double kDurationTolerance = 0.05;

  PhaseInterval sit, sit_exo, walk;

  const PhaseInterval& operator[](Phase p) const;
  /// Order SIT < SIT-EXO < WALK is always enforced. Unless lenient, SIT and
  /// WALK must last 4 and 16 min within 5%. SIT-EXO only needs to be positive.
  void validate(bool lenient) const;
};

/// One subject's physiological recording. Beat and breath timestamps (s) may
/// stand in for the ECG and respiration waveforms.
struct PhysioSession {
  static constexpr double kMinEcgRate = 250.0;
  static constexpr double kMinRespirationRate = 25.0;
  static constexpr double kMinGsrRate = 15.0;

  std::string subject;
  std::optional<UniformChannel> ecg, respiration, gsr;
  std::optional<std::vector<double>> beats, breaths;
  PhaseMarkers markers;

  void validate(bool lenient) const;
};

/// A session directory: manifest.json plus CSV channel files, questionnaire
/// answers and an optional controller command log.
struct ProtocolSession {
  static constexpr int kSchemaVersion = 1;

  std::filesystem::path dir;
  PhysioSession physio;
  std::optional<std::filesystem::path> responses, pairwise, commands;
  /// Every file read while loading, relative to `dir`.
  std::vector<std::string> inputs;
};

/// Reads `dir/manifest.json` and the channel files it names.
ProtocolSession load_session(const std::filesystem::path& dir, bool lenient);

/// Writes channel CSVs and the manifest. Paths of questionnaire and command
/// files are recorded relative to `dir` and must already exist there.
void save_session(const ProtocolSession& session, const std::filesystem::path& dir);

}  // namespace exobench
