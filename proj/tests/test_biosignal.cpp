#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "exobench/biosignal.hpp"
#include "exobench/dsp.hpp"
#include "exobench/error.hpp"
#include "exobench/session_synth.hpp"

using namespace exobench;

namespace {

constexpr double kPi = std::numbers::pi;

double magnitude(const dsp::Biquad& s, double f, double fs) {
  const std::complex<double> z = std::polar(1.0, -2.0 * kPi * f / fs);
  return std::abs((s.b0 + s.b1 * z + s.b2 * z * z) / (1.0 + s.a1 * z + s.a2 * z * z));
}

std::vector<double> modulated_intervals(double seconds, double mean_ms, double depth_ms, double freq_hz) {
  std::vector<double> out;
  for (double t = 0.0; t < seconds;) {
    const double v = mean_ms + depth_ms * std::sin(2.0 * kPi * freq_hz * t);
    out.push_back(v);
    t += v / 1000.0;
  }
  return out;
}

// Fraction of true beats with a detection within the tolerance.
double matched_fraction(const std::vector<double>& truth, const std::vector<double>& found, double tol) {
  int hits = 0;
  for (double b : truth) {
    const auto it = std::lower_bound(found.begin(), found.end(), b - tol);
    if (it != found.end() && std::abs(*it - b) <= tol) ++hits;
  }
  return double(hits) / double(truth.size());
}

}  // namespace

TEST_CASE("filters") {
  const double fs = 250.0;
  const auto lp = dsp::butter_lowpass(15.0, fs);
  const auto hp = dsp::butter_highpass(5.0, fs);
  CHECK(magnitude(lp, 0.0, fs) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(magnitude(lp, 15.0, fs) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
  CHECK(magnitude(hp, 5.0, fs) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
  CHECK(magnitude(hp, 0.0, fs) < 1e-12);
  CHECK_THROWS_AS(dsp::butter_lowpass(200.0, fs), Error);

  SUBCASE("zero-phase low-pass keeps constants and lines") {
    const Eigen::VectorXd line = Eigen::VectorXd::LinSpaced(3000, 2.0, 7.0);
    const auto slow = dsp::butter_lowpass(0.05, 15.0);
    CHECK((dsp::filtfilt({slow}, line, 300) - line).cwiseAbs().maxCoeff() < 1e-9);
    const Eigen::VectorXd flat = Eigen::VectorXd::Constant(500, 5.0);
    CHECK((dsp::filtfilt({slow}, flat, 300) - flat).cwiseAbs().maxCoeff() < 1e-10);
  }

  SUBCASE("filtfilt squares the magnitude response") {
    const double f = 20.0;
    Eigen::VectorXd x(5000);
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * kPi * f * double(i) / fs);
    const Eigen::VectorXd y = dsp::filtfilt({lp}, x, 250);
    const double gain = y.segment(1000, 3000).cwiseAbs().maxCoeff();
    CHECK(gain == doctest::Approx(std::pow(magnitude(lp, f, fs), 2)).epsilon(1e-3));
  }
}

TEST_CASE("spline and detrend") {
  std::vector<double> x, y;
  for (int i = 0; i <= 40; ++i) {
    x.push_back(0.25 * i + 0.01 * (i % 3));
    y.push_back(std::sin(x.back()));
  }
  const dsp::CubicSpline s(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(s(x[i]) == doctest::Approx(y[i]).epsilon(1e-12));
  for (double t = 1.0; t < 9.0; t += 0.137) CHECK(std::abs(s(t) - std::sin(t)) < 2e-4);
  CHECK_THROWS_AS(dsp::CubicSpline({0.0, 1.0, 1.0}, {0.0, 1.0, 2.0}), Error);

  const dsp::CubicSpline line({0.0, 1.0, 3.0, 4.0}, {1.0, 3.0, 7.0, 9.0});
  CHECK(line(2.5) == doctest::Approx(6.0).epsilon(1e-12));

  const Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(100, -3.0, 11.0);
  CHECK(dsp::detrend(r).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("welch spectrum") {
  const double fs = 4.0;
  const double amp = 30.0;
  Eigen::VectorXd x(1024);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = amp * std::sin(2.0 * kPi * 0.1 * double(i) / fs);
  const auto s = dsp::welch(x, fs, 256);
  CHECK(s.df == doctest::Approx(fs / 256.0));
  CHECK(dsp::band_power(s, 0.0, 2.0) == doctest::Approx(amp * amp / 2.0).epsilon(0.02));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 2.0);
  Eigen::VectorXd w(20000);
  for (auto& v : w) v = n(rng);
  CHECK(dsp::band_power(dsp::welch(w, 10.0, 512), 0.0, 5.0) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("beat detection") {
  const double fs = 250.0;

  SUBCASE("60 bpm pulse train") {
    std::vector<double> truth;
    for (double t = 0.5; t < 120.0; t += 1.0) truth.push_back(t);
    const auto det = detect_beats(synth::ecg(truth, fs, 0.0, 120.0), fs);
    CHECK(det.quality_ok);
    CHECK(det.beats.size() == truth.size());
    const auto h = hr_rmssd(beat_intervals(det.beats));
    CHECK(std::abs(h.hr_bpm - 60.0) < 1.0);
    CHECK(matched_fraction(truth, det.beats, 0.004) == 1.0);
  }

  SUBCASE("80 bpm at 10 dB SNR") {
    synth::BeatModel model{[](double) { return 80.0; }};
    int total = 0;
    double worst = 1.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto truth = synth::beat_times(model, 0.5, 119.0, seed);
      Eigen::VectorXd x = synth::ecg(truth, fs, 0.0, 120.0);
      synth::add_noise(x, 10.0, seed + 100);
      const auto det = detect_beats(x, fs);
      worst = std::min(worst, matched_fraction(truth, det.beats, 0.020));
      total += int(truth.size());
    }
    CHECK(total > 700);
    CHECK(worst >= 0.99);
  }

  SUBCASE("flat signal") {
    const auto det = detect_beats(Eigen::VectorXd::Constant(2500, 0.3), fs);
    CHECK(det.beats.empty());
    CHECK_FALSE(det.quality_ok);
    REQUIRE(det.gaps.size() == 1);
    CHECK(det.gaps[0].stop == doctest::Approx(10.0));
  }

  SUBCASE("flat stretch inside a recording") {
    std::vector<double> truth;
    for (double t = 0.5; t < 60.0; t += 0.8) truth.push_back(t);
    Eigen::VectorXd x = synth::ecg(truth, fs, 0.0, 60.0);
    x.segment(20 * 250, 10 * 250).setConstant(0.0);
    const auto det = detect_beats(x, fs);
    CHECK_FALSE(det.quality_ok);
    REQUIRE_FALSE(det.gaps.empty());
    for (double b : det.beats) CHECK_FALSE((b > 20.5 && b < 29.5));
    const auto iv = beat_intervals(det.beats, det.gaps);
    for (double v : iv) CHECK(v == doctest::Approx(800.0).epsilon(0.01));
  }

  CHECK_THROWS_AS(detect_beats(Eigen::VectorXd::Zero(1000), 100.0), Error);
}

TEST_CASE("heart rate and RMSSD") {
  const std::vector<double> steady(10, 750.0);
  CHECK(hr_rmssd(steady).hr_bpm == doctest::Approx(80.0));
  CHECK(hr_rmssd(steady).rmssd_ms == 0.0);

  std::vector<double> alt;
  for (int i = 0; i < 20; ++i) alt.push_back(i % 2 ? 850.0 : 800.0);
  CHECK(hr_rmssd(alt).rmssd_ms == 50.0);

  std::vector<double> shifted = alt;
  for (auto& v : shifted) v += 123.0;
  CHECK(hr_rmssd(shifted).rmssd_ms == doctest::Approx(hr_rmssd(alt).rmssd_ms).epsilon(1e-12));
  CHECK(hr_rmssd(shifted).hr_bpm < hr_rmssd(alt).hr_bpm);

  CHECK(hr_rmssd(std::vector<double>(5, 60000.0 / 118.0)).hr_bpm == doctest::Approx(118.0));
  CHECK(60000.0 / 118.0 == doctest::Approx(508.47).epsilon(1e-4));

  try {
    hr_rmssd(std::vector<double>{800.0});
    FAIL("expected insufficient data");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientData);
  }
}

TEST_CASE("LF power") {
  const auto lf = lf_power(modulated_intervals(180.0, 800.0, 40.0, 0.1));
  CHECK(lf.lf_fraction > 0.9);
  // A 40 ms sinusoid carries 800 ms^2.
  CHECK(lf.lf_ms2 == doctest::Approx(800.0).epsilon(0.1));

  CHECK(lf_power(modulated_intervals(180.0, 800.0, 40.0, 0.3)).lf_fraction < 0.1);
  CHECK(lf_power(std::vector<double>(200, 800.0)).lf_ms2 < 1e-9);

  const double small = lf_power(modulated_intervals(150.0, 800.0, 10.0, 0.1)).lf_ms2;
  const double large = lf_power(modulated_intervals(150.0, 800.0, 30.0, 0.1)).lf_ms2;
  CHECK(large / small == doctest::Approx(9.0).epsilon(0.05));

  CHECK_THROWS_AS(lf_power(modulated_intervals(100.0, 800.0, 40.0, 0.1)), Error);
}

TEST_CASE("respiration rate") {
  const double fs = 25.0;
  auto tone = [&](double hz, double seconds) {
    return synth::respiration([hz](double) { return 60.0 * hz; }, fs, 0.0, seconds);
  };
  const auto half = respiration_rate(tone(0.5, 60.0), fs);
  CHECK(half.valid);
  CHECK(half.rate_bpm == doctest::Approx(30.0).epsilon(0.003));
  CHECK(respiration_rate(tone(31.0 / 60.0, 60.0), fs).rate_bpm == doctest::Approx(31.0).epsilon(0.003));
  CHECK(respiration_rate(tone(19.0 / 60.0, 30.0), fs).rate_bpm == doctest::Approx(19.0).epsilon(0.005));

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::VectorXd w(1500);
    for (auto& v : w) v = n(rng);
    CHECK_FALSE(respiration_rate(w, fs).valid);
  }
  CHECK_THROWS_AS(respiration_rate(tone(0.5, 20.0), fs), Error);

  const auto marks = synth::breath_times([](double) { return 24.0; }, 0.0, 60.0);
  CHECK(respiration_rate_from_marks(marks).rate_bpm == doctest::Approx(24.0));
}

TEST_CASE("GSR decomposition") {
  const double fs = 15.0;

  SUBCASE("constant level") {
    const auto d = gsr_decompose(Eigen::VectorXd::Constant(1800, 5.0), fs);
    CHECK((d.scl.array() - 5.0).abs().maxCoeff() < 1e-10);
    CHECK(d.events.empty());
  }

  SUBCASE("three responses per minute") {
    const auto events = synth::regular_events(0.0, 300.0, 3.0);
    const Eigen::VectorXd x = synth::gsr([](double) { return 5.0; }, events, 0.2, fs, 0.0, 300.0);
    const auto d = gsr_decompose(x, fs);
    CHECK(d.events.size() == events.size());
    for (double start = 0.0; start < 300.0; start += 60.0) CHECK(summarize_gsr(d, start, start + 60.0).scr_rate == 3.0);
    CHECK(((d.scl + d.phasic) - x).cwiseAbs().maxCoeff() < 1e-9);
  }

  SUBCASE("slow drift stays tonic") {
    const Eigen::VectorXd x = synth::gsr([](double t) { return 3.0 + 0.01 * t; }, {}, 0.0, fs, 0.0, 600.0);
    const auto d = gsr_decompose(x, fs);
    CHECK(d.events.empty());
    CHECK(d.phasic.cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("bad input") {
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1800, 2.0);
    x[40] = -0.1;
    try {
      gsr_decompose(x, fs);
      FAIL("expected data-quality error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DataQuality);
    }
    CHECK_THROWS_AS(gsr_decompose(Eigen::VectorXd::Constant(300, 2.0), fs), Error);
  }
}

TEST_CASE("windowed features") {
  PhysioSession s;
  s.markers = {{0.0, 250.0}, {270.0, 390.0}, {420.0, 1380.0}};
  synth::BeatModel model{[](double t) { return t < 400.0 ? 75.0 : 110.0; }};
  s.beats = synth::beat_times(model, 0.0, 1380.0, 5);
  s.breaths = synth::breath_times([](double) { return 18.0; }, 0.0, 1380.0);
  const auto events = synth::regular_events(0.0, 1380.0, 2.0);
  s.gsr = UniformChannel{15.0, 0.0, synth::gsr([](double) { return 4.0; }, events, 0.1, 15.0, 0.0, 1380.0)};

  const auto w = windowed_features(s);
  auto count = [&](Phase p) { return std::count_if(w.begin(), w.end(), [&](const auto& f) { return f.phase == p; }); };
  CHECK(count(Phase::Sit) == 4);  // 250 s: the fifth window would cross the boundary
  CHECK(count(Phase::SitExo) == 2);
  CHECK(count(Phase::Walk) == 16);
  for (const auto& f : w) {
    CHECK(f.stop - f.start == 60.0);
    CHECK(s.markers[f.phase].contains(f.start, f.stop));
    CHECK(f.invalid().empty());
    CHECK(*f.rr == doctest::Approx(18.0).epsilon(0.02));
    CHECK(*f.scr_rate == 2.0);
  }
  CHECK(*w.front().hr == doctest::Approx(75.0).epsilon(0.02));
  CHECK(*w.back().hr == doctest::Approx(110.0).epsilon(0.02));

  const auto back = FeatureWindow::from_json(w[3].to_json());
  CHECK(back.to_json() == w[3].to_json());

  PhysioSession bare = s;
  bare.gsr.reset();
  const auto v = windowed_features(bare);
  CHECK(v[0].invalid() == std::vector<std::string>{"scl", "scr_rate", "scr_amplitude"});
}
