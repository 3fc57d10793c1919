#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace exobench::dsp {

/// Second-order section, transposed direct form II. a0 is normalised to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  /// Gain at z = 1.
  double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

using Cascade = std::vector<Biquad>;

/// Second-order Butterworth sections via the prewarped bilinear transform.
Biquad butter_lowpass(double cutoff_hz, double rate_hz);
Biquad butter_highpass(double cutoff_hz, double rate_hz);

/// Causal filtering from rest.
Eigen::VectorXd lfilter(const Cascade& sections, const Eigen::VectorXd& x);

/// Zero-phase forward-backward filtering. The input is extended by odd
/// reflection of `pad` samples at each end, and every section starts in the
/// steady state of the line fitted to its first `pad` inputs, so constants
/// and straight lines pass through a low-pass without edge transients.
Eigen::VectorXd filtfilt(const Cascade& sections, const Eigen::VectorXd& x, Eigen::Index pad);

/// Natural cubic spline through strictly increasing knots.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y);

  double operator()(double t) const;
  Eigen::VectorXd sample(double start, double step, Eigen::Index count) const;

 private:
  std::vector<double> x_, y_, m_;  // m_ holds second derivatives
};

/// Subtracts the least-squares line.
Eigen::VectorXd detrend(const Eigen::VectorXd& x);

struct Spectrum {
  Eigen::VectorXd freq;  // Hz
  Eigen::VectorXd psd;   // one-sided, units^2 / Hz
  double df = 0.0;
};

/// Averaged modified periodogram: Hann window, `segment` samples with 50%
/// overlap, each segment zero-padded to `nfft` (>= segment). A record shorter
/// than `segment` is analysed as a single segment of its own length.
Spectrum welch(const Eigen::VectorXd& x, double rate_hz, Eigen::Index segment, Eigen::Index nfft = 0);

/// Rectangle-rule integral of the PSD over bins with lo <= f <= hi.
double band_power(const Spectrum& s, double lo_hz, double hi_hz);

double median(std::vector<double> v);

}  // namespace exobench::dsp
