#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "exobench/exo_model.hpp"

namespace exobench {

enum class StageKind { Walk, LeftSwing, RightSwing, Treadmill };

/// Which part of a recording a frame belongs to. Treadmill stages carry the belt speed.
struct StageTag {
  StageKind kind = StageKind::Walk;
  double speed_kmh = 0.0;

  std::string to_string() const;
  /// Accepts walk, left_swing, right_swing, treadmill_<speed>.
  static StageTag parse(std::string_view text);

  friend bool operator==(const StageTag&, const StageTag&) = default;
};

/// One sample of joint encoders and insole loads.
struct SensorFrame {
  double t = 0.0;                 // s
  Vector6d q = Vector6d::Zero();  // rad, [RH RK RA LH LK LA]
  double left_load = 0.0;         // N
  double right_load = 0.0;        // N
  StageTag stage;
};

/// CSV columns: t,q_RH,q_RK,q_RA,q_LH,q_LK,q_LA,left_load,right_load,stage_tag
std::string frames_to_csv(const std::vector<SensorFrame>& frames);
/// Throws Parse with the offending line number.
std::vector<SensorFrame> frames_from_csv(const std::string& text, const std::string& origin = "<memory>");
void write_frames(const std::filesystem::path& path, const std::vector<SensorFrame>& frames);
std::vector<SensorFrame> read_frames(const std::filesystem::path& path);

}  // namespace exobench
