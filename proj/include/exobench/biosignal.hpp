#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "exobench/physio_session.hpp"

namespace exobench {

struct Gap {
  double start = 0.0;
  double stop = 0.0;
};

struct BeatDetection {
  std::vector<double> beats;  // R-peak times, s
  std::vector<Gap> gaps;      // flat-line stretches
  bool quality_ok = true;     // false when gaps exist or no beat was found
};

/// R-peak detector: 5-15 Hz band-pass, squared slope, 150 ms integration,
/// adaptive threshold and a 250 ms refractory period. Flat stretches of one
/// second or more become gaps rather than beats.
BeatDetection detect_beats(const Eigen::VectorXd& ecg, double rate_hz, double t0 = 0.0);

/// Intervals (ms) between consecutive beats, skipping pairs that straddle a gap.
std::vector<double> beat_intervals(std::span<const double> beats, std::span<const Gap> gaps = {});

struct HeartRate {
  double hr_bpm = 0.0;
  double rmssd_ms = 0.0;
};

/// HR = 60000 / mean interval, RMSSD = rms of successive differences.
/// Needs at least two intervals.
HeartRate hr_rmssd(std::span<const double> intervals_ms);

struct LfPower {
  static constexpr double kMinDuration = 120.0;  // s
  /// Beat-aligned windows end up a fraction of an interval short.
  static constexpr double kDurationSlack = 0.02;
  static constexpr double kResampleRate = 4.0;
  static constexpr Eigen::Index kSegment = 256;

  double lf_ms2 = 0.0;
  double lf_fraction = 0.0;  // LF / power in 0.04-0.4 Hz
};

/// LF (0.04-0.15 Hz) power of the tachogram: 4 Hz cubic resampling, linear
/// detrend, Welch spectrum. Throws InsufficientData below 120 s of intervals.
LfPower lf_power(std::span<const double> intervals_ms);

struct RespirationEstimate {
  static constexpr double kMinDuration = 30.0;
  static constexpr double kLowHz = 0.07;
  static constexpr double kHighHz = 1.0;
  /// Peak PSD must exceed this multiple of the median in-band PSD.
  static constexpr double kNoiseFloorRatio = 10.0;

  double rate_bpm = 0.0;
  double peak_ratio = 0.0;
  bool valid = false;
};

/// Dominant breathing frequency from the Welch peak (30 s Hann segments, 4x
/// zero padding, parabolic refinement).
RespirationEstimate respiration_rate(const Eigen::VectorXd& wave, double rate_hz);

/// Mean breathing rate from breath timestamps (s) spanning at least 30 s.
RespirationEstimate respiration_rate_from_marks(std::span<const double> marks);

struct ScrEvent {
  double t = 0.0;
  double amplitude = 0.0;  // phasic value at the peak, uS
};

struct GsrDecomposition {
  static constexpr double kCutoffHz = 0.05;
  static constexpr double kMinAmplitude = 0.01;
  static constexpr double kMinSeparation = 1.0;
  static constexpr double kMinDuration = 60.0;

  double rate_hz = 0.0;
  double t0 = 0.0;
  Eigen::VectorXd scl;
  Eigen::VectorXd phasic;
  std::vector<ScrEvent> events;
};

/// Tonic level by zero-phase 0.05 Hz low-pass, phasic = input - tonic, SCRs as
/// phasic peaks above 0.01 uS at least 1 s apart. Negative conductance throws
/// DataQuality.
GsrDecomposition gsr_decompose(const Eigen::VectorXd& gsr_us, double rate_hz, double t0 = 0.0);

struct GsrSummary {
  double scl_mean = 0.0;
  double scr_rate = 0.0;       // events per minute
  double scr_amplitude = 0.0;  // mean event amplitude, 0 without events
};

GsrSummary summarize_gsr(const GsrDecomposition& d, double start, double stop);

/// One analysis window. Missing values are features that could not be
/// computed or fell outside their valid range.
struct FeatureWindow {
  Phase phase = Phase::Sit;
  double start = 0.0;
  double stop = 0.0;
  std::optional<double> hr, rmssd, rr, scl, scr_rate, scr_amplitude, lf_power, lf_fraction;

  /// Names of the invalid features.
  std::vector<std::string> invalid() const;
  nlohmann::json to_json() const;
  static FeatureWindow from_json(const nlohmann::json& j);
};

struct WindowConfig {
  double window = 60.0;
  double hop = 60.0;
};

/// Features over non-overlapping windows per phase; windows that would cross
/// a phase boundary are dropped. LF uses the 120 s stretch of the phase that
/// ends with the window (or starts with the phase when the window is early).
std::vector<FeatureWindow> windowed_features(const PhysioSession& session, const WindowConfig& cfg = {});

}  // namespace exobench
