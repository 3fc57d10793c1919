#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "exobench/blend_control.hpp"
#include "exobench/sensor_stream.hpp"

namespace exobench {

/// amplitude * cos(2 pi order (phi - center)), phi in gait cycles.
struct HarmonicTerm {
  int order = 1;
  double amplitude = 0.0;  // rad
  double center = 0.0;     // cycles
};

struct JointTemplate {
  double mean = 0.0;  // rad
  std::vector<HarmonicTerm> terms;

  double operator()(double phi) const;
  /// Extremes over one cycle, sampled densely.
  std::pair<double, double> range() const;
};

/// Sinusoid-based gait kinematics and insole loading. Phase 0 is left heel
/// strike; the right leg runs half a cycle behind.
struct GaitPattern {
  double cadence = 100.0;  // steps/min; one cycle is two steps
  JointTemplate hip;
  JointTemplate knee;   // flexion only
  JointTemplate ankle;
  double double_support = 0.2;  // fraction of the cycle spent in double support
  double treadmill_speed_kmh = 2.0;
  double body_load = 800.0;          // N carried by the soles
  double angle_noise = 0.005;        // rad, Gaussian
  double load_noise = 0.02;          // fraction of the load, Gaussian, loaded soles only

  static GaitPattern default_pattern();
  /// Throws Validation on cadence <= 0, double support outside [0, 0.4],
  /// |hip| > 0.7 rad or knee outside [0, 1.3] rad.
  void validate() const;

  double cycle_period() const { return 120.0 / cadence; }
  /// Load-share label (+1 left stance, -1 right stance) at cycle phase phi.
  double phase_label(double phi) const;
  Vector6d joint_angles(double phi) const;

  nlohmann::json to_json() const;
  static GaitPattern from_json(const nlohmann::json& j);
};

/// `cycles` gait cycles sampled at `rate_hz` (>= 100), tagged `walk`.
std::vector<SensorFrame> generate_cycle(const GaitPattern& pattern, double rate_hz, double cycles,
                                        std::uint64_t seed);

/// Gait training protocol: three left-leg swings (right foot grounded), three
/// right-leg swings, then treadmill walking from 1.0 to 3.0 km/h in 0.5 km/h
/// steps with cadence scaled by speed. About two minutes in total.
std::vector<SensorFrame> generate_training_protocol(const GaitPattern& pattern, std::uint64_t seed,
                                                    double rate_hz = 100.0);

/// Treadmill speeds visited by generate_training_protocol.
std::vector<double> treadmill_speeds();

struct TimingReport {
  std::size_t steps = 0;
  double p50_us = 0.0;
  double p95_us = 0.0;
  double p99_us = 0.0;
  double max_us = 0.0;
  double mean_us = 0.0;
};

/// Inter-step jumps ||tau(t+dt) - tau(t)||_inf over actuated joints, between
/// consecutive non-degraded commands.
struct SmoothnessReport {
  std::size_t jumps = 0;
  double median_jump = 0.0;  // Nm
  double max_jump = 0.0;     // Nm
  double max_over_median = 0.0;
  double lipschitz = 0.0;  // Nm/s, max jump / dt
};

struct ReplayReport {
  TimingReport timing;
  SmoothnessReport smoothness;

  nlohmann::json to_json() const;
  static ReplayReport from_json(const nlohmann::json& j);
};

ReplayReport summarize(std::span<const AssistCommand> commands);

struct ReplayResult {
  std::vector<AssistCommand> commands;
  ReplayReport report;
};

/// Feeds every frame through the loop in order.
ReplayResult replay(std::span<const SensorFrame> frames, ControlLoop& loop);

}  // namespace exobench
