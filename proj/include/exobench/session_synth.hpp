#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "exobench/physio_session.hpp"

namespace exobench::synth {

using Profile = std::function<double(double)>;  // value as a function of time (s)

struct BeatModel {
  Profile hr_bpm;
  double lf_depth = 0.04;  // relative interval modulation at 0.1 Hz
  double hf_depth = 0.02;  // relative interval modulation at 0.25 Hz
  double jitter_ms = 5.0;
};

/// Beat times in [start, stop): each interval is 60/HR(t) scaled by the
/// modulation terms plus Gaussian jitter.
std::vector<double> beat_times(const BeatModel& model, double start, double stop, std::uint64_t seed);

/// Sum-of-Gaussians PQRST waveform (mV) with the R peak at each beat time.
Eigen::VectorXd ecg(std::span<const double> beats, double rate_hz, double t0, double duration);

/// Adds white Gaussian noise at the given SNR relative to the mean-removed signal power.
void add_noise(Eigen::VectorXd& x, double snr_db, std::uint64_t seed);

/// Phase-integrated sinusoid following the breathing rate profile (breaths/min).
Eigen::VectorXd respiration(const Profile& rate_bpm, double rate_hz, double t0, double duration);

/// Breath onsets (s) for the same profile.
std::vector<double> breath_times(const Profile& rate_bpm, double start, double stop);

/// Tonic level plus SCR bumps (1 s rise, 3 s decay time constant) of the given
/// amplitude (uS) at each event time.
Eigen::VectorXd gsr(const Profile& level_us, std::span<const double> scr_times, double amplitude_us, double rate_hz,
                    double t0, double duration);

/// Event times at a fixed rate per minute, offset half a period into each slot.
std::vector<double> regular_events(double start, double stop, double per_minute);

struct CohortConfig {
  int subjects = 5;
  std::uint64_t seed = 1;
  double ecg_rate = 250.0;
  double respiration_rate = 25.0;
  double gsr_rate = 15.0;
  double controller_seconds = 2.0;  // 5 kHz command log per subject
};

/// Writes one session directory per subject (S01, S02, ...) under `root`
/// covering SIT 0-240 s, SIT-EXO 270-390 s and WALK 420-1380 s, with
/// questionnaire answers and a controller command log.
std::vector<std::filesystem::path> write_cohort(const std::filesystem::path& root, const CohortConfig& cfg = {});

}  // namespace exobench::synth
