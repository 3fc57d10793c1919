#include "exobench/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "exobench/error.hpp"

namespace exobench::dsp {

namespace {

void check_cutoff(double cutoff_hz, double rate_hz) {
  if (!(rate_hz > 0.0) || !(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * rate_hz))
    throw Error(ErrorKind::InvalidInput, "filter cutoff must lie in (0, rate/2)");
}

// sum_m m h[m], the first moment of the impulse response.
double delay_moment(const Biquad& s) {
  const double num = s.b0 + s.b1 + s.b2, den = 1.0 + s.a1 + s.a2;
  const double dnum = s.b1 + 2.0 * s.b2, dden = s.a1 + 2.0 * s.a2;
  return (dnum * den - num * dden) / (den * den);
}

// Runs one section in place. With fit > 0 the delay line starts in the
// steady state for the least-squares line through the first `fit` samples.
void run(const Biquad& s, std::vector<double>& v, std::size_t fit) {
  if (v.empty()) return;
  double z1 = 0.0, z2 = 0.0;
  if (fit > 0) {
    fit = std::min(fit, v.size());
    double intercept = v.front(), slope = 0.0;
    if (fit >= 2) {
      const double mk = 0.5 * double(fit - 1);
      double mx = 0.0, sxy = 0.0, sxx = 0.0;
      for (std::size_t k = 0; k < fit; ++k) mx += v[k];
      mx /= double(fit);
      for (std::size_t k = 0; k < fit; ++k) {
        sxy += (double(k) - mk) * (v[k] - mx);
        sxx += (double(k) - mk) * (double(k) - mk);
      }
      slope = sxy / sxx;
      intercept = mx - slope * mk;
    }
    const double gain = s.dc_gain(), moment = delay_moment(s);
    auto y = [&](double x) { return gain * x - slope * moment; };
    const double x1 = intercept - slope, x2 = intercept - 2.0 * slope;
    z2 = s.b2 * x1 - s.a2 * y(x1);
    z1 = s.b1 * x1 - s.a1 * y(x1) + (s.b2 * x2 - s.a2 * y(x2));
  }
  for (double& x : v) {
    const double y = s.b0 * x + z1;
    z1 = s.b1 * x - s.a1 * y + z2;
    z2 = s.b2 * x - s.a2 * y;
    x = y;
  }
}

}  // namespace

Biquad butter_lowpass(double cutoff_hz, double rate_hz) {
  check_cutoff(cutoff_hz, rate_hz);
  const double k = std::tan(std::numbers::pi * cutoff_hz / rate_hz);
  const double q = std::numbers::sqrt2;
  const double norm = 1.0 / (1.0 + q * k + k * k);
  Biquad s;
  s.b0 = k * k * norm;
  s.b1 = 2.0 * s.b0;
  s.b2 = s.b0;
  s.a1 = 2.0 * (k * k - 1.0) * norm;
  s.a2 = (1.0 - q * k + k * k) * norm;
  return s;
}

Biquad butter_highpass(double cutoff_hz, double rate_hz) {
  check_cutoff(cutoff_hz, rate_hz);
  const double k = std::tan(std::numbers::pi * cutoff_hz / rate_hz);
  const double q = std::numbers::sqrt2;
  const double norm = 1.0 / (1.0 + q * k + k * k);
  Biquad s;
  s.b0 = norm;
  s.b1 = -2.0 * norm;
  s.b2 = norm;
  s.a1 = 2.0 * (k * k - 1.0) * norm;
  s.a2 = (1.0 - q * k + k * k) * norm;
  return s;
}

Eigen::VectorXd lfilter(const Cascade& sections, const Eigen::VectorXd& x) {
  std::vector<double> v(x.data(), x.data() + x.size());
  for (const auto& s : sections) run(s, v, 0);
  return Eigen::Map<Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

Eigen::VectorXd filtfilt(const Cascade& sections, const Eigen::VectorXd& x, Eigen::Index pad) {
  const Eigen::Index n = x.size();
  if (n == 0) return x;
  pad = std::clamp<Eigen::Index>(pad, 0, n - 1);

  std::vector<double> v;
  v.reserve(std::size_t(n + 2 * pad));
  for (Eigen::Index i = pad; i >= 1; --i) v.push_back(2.0 * x[0] - x[i]);
  v.insert(v.end(), x.data(), x.data() + n);
  for (Eigen::Index i = 1; i <= pad; ++i) v.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const std::size_t fit = std::size_t(std::max<Eigen::Index>(pad, 2));
  for (const auto& s : sections) run(s, v, fit);
  std::reverse(v.begin(), v.end());
  for (const auto& s : sections) run(s, v, fit);
  std::reverse(v.begin(), v.end());
  return Eigen::Map<Eigen::VectorXd>(v.data() + pad, n);
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n != y_.size() || n < 2) throw Error(ErrorKind::InvalidInput, "spline needs at least two matching knots");
  for (std::size_t i = 1; i < n; ++i)
    if (!(x_[i] > x_[i - 1])) throw Error(ErrorKind::InvalidInput, "spline knots must increase strictly");

  // Thomas algorithm on the tridiagonal system for interior second derivatives.
  m_.assign(n, 0.0);
  if (n == 2) return;
  std::vector<double> c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    const double rhs = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    const double diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
    c[i] = h1 / diag;
    d[i] = (rhs - h0 * d[i - 1]) / diag;
  }
  for (std::size_t i = n - 2; i >= 1; --i) m_[i] = d[i] - c[i] * m_[i + 1];
}

double CubicSpline::operator()(double t) const {
  const auto it = std::upper_bound(x_.begin() + 1, x_.end() - 1, t);
  const std::size_t i = std::size_t(it - x_.begin()) - 1;
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - t) / h;
  const double b = (t - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

Eigen::VectorXd CubicSpline::sample(double start, double step, Eigen::Index count) const {
  Eigen::VectorXd out(count);
  for (Eigen::Index i = 0; i < count; ++i) out[i] = (*this)(start + double(i) * step);
  return out;
}

Eigen::VectorXd detrend(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  if (n < 2) return x - Eigen::VectorXd::Constant(n, n ? x.mean() : 0.0);
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0.0, double(n - 1)).array() - 0.5 * double(n - 1);
  const double slope = t.dot(x) / t.squaredNorm();
  return (x.array() - x.mean() - slope * t.array()).matrix();
}

Spectrum welch(const Eigen::VectorXd& x, double rate_hz, Eigen::Index segment, Eigen::Index nfft) {
  if (x.size() < 2) throw Error(ErrorKind::InsufficientData, "spectrum needs at least two samples");
  segment = std::min(segment, x.size());
  nfft = std::max(nfft, segment);
  const Eigen::Index step = std::max<Eigen::Index>(1, segment / 2);

  std::vector<double> window(static_cast<std::size_t>(segment));
  for (Eigen::Index i = 0; i < segment; ++i)
    window[std::size_t(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(i) / double(segment));
  double wss = 0.0;
  for (double w : window) wss += w * w;

  Eigen::FFT<double> fft;
  const Eigen::Index bins = nfft / 2 + 1;
  Spectrum out;
  out.psd = Eigen::VectorXd::Zero(bins);
  std::vector<double> buf(static_cast<std::size_t>(nfft));
  std::vector<std::complex<double>> spec;
  int count = 0;
  for (Eigen::Index start = 0; start + segment <= x.size(); start += step) {
    const Eigen::VectorXd seg = detrend(x.segment(start, segment));
    std::fill(buf.begin(), buf.end(), 0.0);
    for (Eigen::Index i = 0; i < segment; ++i) buf[std::size_t(i)] = seg[i] * window[std::size_t(i)];
    fft.fwd(spec, buf);
    for (Eigen::Index k = 0; k < bins; ++k) out.psd[k] += std::norm(spec[std::size_t(k)]);
    ++count;
  }
  out.psd /= double(count) * rate_hz * wss;
  // Fold negative frequencies, except at DC and (for even nfft) Nyquist.
  const Eigen::Index last = (nfft % 2 == 0) ? bins - 1 : bins;
  out.psd.segment(1, last - 1) *= 2.0;
  out.df = rate_hz / double(nfft);
  out.freq = Eigen::VectorXd::LinSpaced(bins, 0.0, double(bins - 1) * out.df);
  return out;
}

double band_power(const Spectrum& s, double lo_hz, double hi_hz) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < s.freq.size(); ++k)
    if (s.freq[k] >= lo_hz && s.freq[k] <= hi_hz) sum += s.psd[k];
  return sum * s.df;
}

double median(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorKind::InsufficientData, "median of an empty set");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + std::ptrdiff_t(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + std::ptrdiff_t(mid)));
}

}  // namespace exobench::dsp
