#include "exobench/biosignal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "exobench/dsp.hpp"
#include "exobench/error.hpp"

namespace exobench {

namespace {

constexpr double kRefractory = 0.25;    // s
constexpr double kIntegration = 0.15;   // s
constexpr double kPeakSearch = 0.075;   // s, R-peak refinement half-width
constexpr double kBeatTimeout = 2.0;    // s without a beat before the threshold relaxes

// Vertex offset of the parabola through (-1, a), (0, b), (1, c).
double parabolic_offset(double a, double b, double c) {
  const double den = a - 2.0 * b + c;
  return den == 0.0 ? 0.0 : 0.5 * (a - c) / den;
}

}  // namespace

BeatDetection detect_beats(const Eigen::VectorXd& ecg, double rate_hz, double t0) {
  if (!(rate_hz >= PhysioSession::kMinEcgRate))
    throw Error(ErrorKind::InvalidInput, "beat detection needs ECG sampled at >= 250 Hz");
  if (!ecg.allFinite()) throw Error(ErrorKind::DataQuality, "ECG contains non-finite samples");
  BeatDetection out;
  const Eigen::Index n = ecg.size();
  if (n < 3) {
    out.quality_ok = false;
    return out;
  }

  // Flat-line blocks of one second.
  const Eigen::Index block = Eigen::Index(std::lround(rate_hz));
  const Eigen::Index blocks = (n + block - 1) / block;
  std::vector<double> spread(static_cast<std::size_t>(blocks));
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const auto seg = ecg.segment(b * block, std::min(block, n - b * block));
    spread[std::size_t(b)] = seg.maxCoeff() - seg.minCoeff();
  }
  const double flat_level = std::max(1e-9, 1e-3 * dsp::median(spread));
  std::vector<bool> flat(static_cast<std::size_t>(n), false);
  for (Eigen::Index b = 0; b < blocks; ++b) {
    if (spread[std::size_t(b)] > flat_level) continue;
    const Eigen::Index lo = b * block, hi = std::min(n, lo + block);
    std::fill(flat.begin() + lo, flat.begin() + hi, true);
    const double gs = t0 + double(lo) / rate_hz, ge = t0 + double(hi) / rate_hz;
    if (!out.gaps.empty() && out.gaps.back().stop == gs)
      out.gaps.back().stop = ge;
    else
      out.gaps.push_back({gs, ge});
  }

  const dsp::Cascade band{dsp::butter_highpass(5.0, rate_hz), dsp::butter_lowpass(15.0, rate_hz)};
  const Eigen::VectorXd bp = dsp::filtfilt(band, ecg, block);

  Eigen::VectorXd energy = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    if (flat[std::size_t(i)]) continue;
    const double slope = 0.5 * (bp[i + 1] - bp[i - 1]) * rate_hz;
    energy[i] = slope * slope;
  }
  // Centred moving integration, so peaks stay aligned with the QRS.
  const Eigen::Index half = std::max<Eigen::Index>(1, Eigen::Index(std::lround(0.5 * kIntegration * rate_hz)));
  std::vector<double> prefix(static_cast<std::size_t>(n + 1), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) prefix[std::size_t(i + 1)] = prefix[std::size_t(i)] + energy[i];
  Eigen::VectorXd mwi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - half), hi = std::min(n, i + half + 1);
    mwi[i] = (prefix[std::size_t(hi)] - prefix[std::size_t(lo)]) / double(hi - lo);
  }

  const Eigen::Index learn = std::min(n, Eigen::Index(2.0 * rate_hz));
  double signal_level = 0.5 * mwi.head(learn).maxCoeff();
  double noise_level = 0.5 * mwi.head(learn).mean();
  const Eigen::Index refractory = Eigen::Index(std::lround(kRefractory * rate_hz));
  const Eigen::Index timeout = Eigen::Index(std::lround(kBeatTimeout * rate_hz));
  std::vector<Eigen::Index> peaks;
  Eigen::Index last_activity = 0;

  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    if (!(mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1]) || mwi[i] <= 0.0) continue;
    const double pk = mwi[i];
    const Eigen::Index since = i - (peaks.empty() ? last_activity : std::max(peaks.back(), last_activity));
    if (since > timeout) {
      signal_level *= 0.5;
      last_activity = i;
    }
    const double threshold = noise_level + 0.25 * (signal_level - noise_level);
    if (pk > threshold) {
      if (!peaks.empty() && i - peaks.back() < refractory) {
        if (pk > mwi[peaks.back()]) peaks.back() = i;
        continue;
      }
      peaks.push_back(i);
      signal_level = 0.125 * pk + 0.875 * signal_level;
    } else {
      noise_level = 0.125 * pk + 0.875 * noise_level;
    }
  }

  const Eigen::Index search = Eigen::Index(std::lround(kPeakSearch * rate_hz));
  for (Eigen::Index p : peaks) {
    const Eigen::Index lo = std::max<Eigen::Index>(1, p - search), hi = std::min(n - 2, p + search);
    Eigen::Index best = lo;
    for (Eigen::Index i = lo; i <= hi; ++i)
      if (std::abs(bp[i]) > std::abs(bp[best])) best = i;
    const double offset = parabolic_offset(std::abs(bp[best - 1]), std::abs(bp[best]), std::abs(bp[best + 1]));
    out.beats.push_back(t0 + (double(best) + offset) / rate_hz);
  }
  out.quality_ok = out.gaps.empty() && !out.beats.empty();
  return out;
}

std::vector<double> beat_intervals(std::span<const double> beats, std::span<const Gap> gaps) {
  std::vector<double> out;
  for (std::size_t i = 1; i < beats.size(); ++i) {
    const double a = beats[i - 1], b = beats[i];
    const bool broken = std::any_of(gaps.begin(), gaps.end(), [&](const Gap& g) { return g.start < b && g.stop > a; });
    if (!broken) out.push_back(1000.0 * (b - a));
  }
  return out;
}

HeartRate hr_rmssd(std::span<const double> intervals_ms) {
  if (intervals_ms.size() < 2) throw Error(ErrorKind::InsufficientData, "HR and RMSSD need at least two intervals");
  for (double v : intervals_ms)
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::DataQuality, "beat intervals must be positive");
  const double mean = std::accumulate(intervals_ms.begin(), intervals_ms.end(), 0.0) / double(intervals_ms.size());
  double ss = 0.0;
  for (std::size_t i = 1; i < intervals_ms.size(); ++i) {
    const double d = intervals_ms[i] - intervals_ms[i - 1];
    ss += d * d;
  }
  return {60000.0 / mean, std::sqrt(ss / double(intervals_ms.size() - 1))};
}

LfPower lf_power(std::span<const double> intervals_ms) {
  const double duration = std::accumulate(intervals_ms.begin(), intervals_ms.end(), 0.0) / 1000.0;
  if (intervals_ms.size() < 4 || duration < LfPower::kMinDuration * (1.0 - LfPower::kDurationSlack))
    throw Error(ErrorKind::InsufficientData, "LF power needs 120 s of beat intervals");

  std::vector<double> t, rr;
  double clock = 0.0;
  for (double v : intervals_ms) {
    if (!(v > 0.0)) throw Error(ErrorKind::DataQuality, "beat intervals must be positive");
    clock += v / 1000.0;
    t.push_back(clock);
    rr.push_back(v);
  }
  const dsp::CubicSpline spline(t, rr);
  const double step = 1.0 / LfPower::kResampleRate;
  const auto count = Eigen::Index(std::floor((t.back() - t.front()) / step)) + 1;
  const Eigen::VectorXd tach = dsp::detrend(spline.sample(t.front(), step, count));

  const auto s = dsp::welch(tach, LfPower::kResampleRate, LfPower::kSegment);
  LfPower out;
  out.lf_ms2 = dsp::band_power(s, 0.04, 0.15);
  const double total = dsp::band_power(s, 0.04, 0.4);
  const double mean_rr = duration * 1000.0 / double(intervals_ms.size());
  out.lf_fraction = total > 1e-12 * mean_rr * mean_rr ? out.lf_ms2 / total : 0.0;
  return out;
}

RespirationEstimate respiration_rate(const Eigen::VectorXd& wave, double rate_hz) {
  if (!(rate_hz > 2.0 * RespirationEstimate::kHighHz)) throw Error(ErrorKind::InvalidInput, "respiration rate too low");
  if (double(wave.size()) < RespirationEstimate::kMinDuration * rate_hz - 0.5)
    throw Error(ErrorKind::InsufficientData, "respiration needs a 30 s window");
  const auto segment = Eigen::Index(std::lround(RespirationEstimate::kMinDuration * rate_hz));
  const auto s = dsp::welch(wave, rate_hz, segment, 4 * std::min(segment, wave.size()));

  std::vector<double> band;
  Eigen::Index peak = -1;
  for (Eigen::Index k = 0; k < s.freq.size(); ++k) {
    if (s.freq[k] < RespirationEstimate::kLowHz || s.freq[k] > RespirationEstimate::kHighHz) continue;
    band.push_back(s.psd[k]);
    if (peak < 0 || s.psd[k] > s.psd[peak]) peak = k;
  }
  RespirationEstimate out;
  if (peak < 0) return out;
  const double floor = dsp::median(band);
  out.peak_ratio = floor > 0.0 ? s.psd[peak] / floor : (s.psd[peak] > 0.0 ? INFINITY : 0.0);
  double f = s.freq[peak];
  if (peak > 0 && peak + 1 < s.freq.size()) f += s.df * parabolic_offset(s.psd[peak - 1], s.psd[peak], s.psd[peak + 1]);
  out.rate_bpm = 60.0 * f;
  out.valid = out.peak_ratio >= RespirationEstimate::kNoiseFloorRatio && out.rate_bpm > 4.0 && out.rate_bpm < 60.0;
  return out;
}

RespirationEstimate respiration_rate_from_marks(std::span<const double> marks) {
  if (marks.size() < 2 || marks.back() - marks.front() < RespirationEstimate::kMinDuration)
    throw Error(ErrorKind::InsufficientData, "breath marks must span 30 s");
  RespirationEstimate out;
  out.rate_bpm = 60.0 * double(marks.size() - 1) / (marks.back() - marks.front());
  out.valid = out.rate_bpm > 4.0 && out.rate_bpm < 60.0;
  return out;
}

GsrDecomposition gsr_decompose(const Eigen::VectorXd& gsr_us, double rate_hz, double t0) {
  using D = GsrDecomposition;
  if (!(rate_hz > 0.0) || double(gsr_us.size()) < D::kMinDuration * rate_hz - 0.5)
    throw Error(ErrorKind::InsufficientData, "GSR decomposition needs a 60 s window");
  for (Eigen::Index i = 0; i < gsr_us.size(); ++i)
    if (!(gsr_us[i] >= 0.0))
      throw Error(ErrorKind::DataQuality, "negative or non-finite skin conductance at t = " +
                                              std::to_string(t0 + double(i) / rate_hz) + " s");

  D out;
  out.rate_hz = rate_hz;
  out.t0 = t0;
  const auto pad = Eigen::Index(std::lround(rate_hz / D::kCutoffHz));
  out.scl = dsp::filtfilt({dsp::butter_lowpass(D::kCutoffHz, rate_hz)}, gsr_us, pad);
  out.phasic = gsr_us - out.scl;

  std::vector<Eigen::Index> candidates;
  const Eigen::VectorXd& r = out.phasic;
  for (Eigen::Index i = 1; i + 1 < r.size(); ++i)
    if (r[i] > D::kMinAmplitude && r[i] > r[i - 1] && r[i] >= r[i + 1]) candidates.push_back(i);
  // Largest peaks claim their 1 s neighbourhood first.
  std::stable_sort(candidates.begin(), candidates.end(), [&](auto a, auto b) { return r[a] > r[b]; });
  const double sep = D::kMinSeparation * rate_hz;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index c : candidates)
    if (std::none_of(kept.begin(), kept.end(), [&](Eigen::Index k) { return std::abs(double(c - k)) < sep; }))
      kept.push_back(c);
  std::sort(kept.begin(), kept.end());
  for (Eigen::Index k : kept) out.events.push_back({t0 + double(k) / rate_hz, r[k]});
  return out;
}

GsrSummary summarize_gsr(const GsrDecomposition& d, double start, double stop) {
  if (!(stop > start)) throw Error(ErrorKind::InvalidInput, "empty GSR summary window");
  const auto index = [&](double t) {
    return Eigen::Index(std::clamp(std::ceil((t - d.t0) * d.rate_hz - 1e-9), 0.0, double(d.scl.size())));
  };
  const Eigen::Index a = index(start), b = index(stop);
  if (b <= a) throw Error(ErrorKind::InsufficientData, "GSR summary window has no samples");
  GsrSummary s;
  s.scl_mean = d.scl.segment(a, b - a).mean();
  int count = 0;
  double amp = 0.0;
  for (const auto& e : d.events)
    if (e.t >= start && e.t < stop) {
      ++count;
      amp += e.amplitude;
    }
  s.scr_rate = double(count) * 60.0 / (stop - start);
  s.scr_amplitude = count ? amp / count : 0.0;
  return s;
}

std::vector<std::string> FeatureWindow::invalid() const {
  std::vector<std::string> out;
  const std::pair<const char*, const std::optional<double>*> all[] = {
      {"hr", &hr},   {"rmssd", &rmssd},           {"rr", &rr},             {"scl", &scl},
      {"scr_rate", &scr_rate}, {"scr_amplitude", &scr_amplitude}, {"lf_power", &lf_power}, {"lf_fraction", &lf_fraction}};
  for (const auto& [name, v] : all)
    if (!v->has_value()) out.emplace_back(name);
  return out;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

Phase phase_from(const std::string& s) {
  for (Phase p : kPhases)
    if (to_string(p) == s) return p;
  throw Error(ErrorKind::Parse, "unknown phase '" + s + "'");
}

}  // namespace

nlohmann::json FeatureWindow::to_json() const {
  return {{"phase", to_string(phase)}, {"start", start},       {"stop", stop},
          {"hr", opt(hr)},             {"rmssd", opt(rmssd)},  {"rr", opt(rr)},
          {"scl", opt(scl)},           {"scr_rate", opt(scr_rate)}, {"scr_amplitude", opt(scr_amplitude)},
          {"lf_power", opt(lf_power)}, {"lf_fraction", opt(lf_fraction)}};
}

FeatureWindow FeatureWindow::from_json(const nlohmann::json& j) {
  FeatureWindow w;
  w.phase = phase_from(j.at("phase").get<std::string>());
  w.start = j.at("start").get<double>();
  w.stop = j.at("stop").get<double>();
  w.hr = opt_from(j, "hr");
  w.rmssd = opt_from(j, "rmssd");
  w.rr = opt_from(j, "rr");
  w.scl = opt_from(j, "scl");
  w.scr_rate = opt_from(j, "scr_rate");
  w.scr_amplitude = opt_from(j, "scr_amplitude");
  w.lf_power = opt_from(j, "lf_power");
  w.lf_fraction = opt_from(j, "lf_fraction");
  return w;
}

std::vector<FeatureWindow> windowed_features(const PhysioSession& session, const WindowConfig& cfg) {
  if (!(cfg.window > 0.0) || !(cfg.hop > 0.0)) throw Error(ErrorKind::InvalidInput, "window and hop must be positive");

  std::vector<double> beats;
  std::vector<Gap> gaps;
  if (session.beats) {
    beats = *session.beats;
  } else if (session.ecg) {
    auto det = detect_beats(session.ecg->values, session.ecg->rate_hz, session.ecg->t0);
    beats = std::move(det.beats);
    gaps = std::move(det.gaps);
  }
  const bool have_beats = session.beats || session.ecg;
  auto beats_in = [&](double a, double b) {
    const auto lo = std::lower_bound(beats.begin(), beats.end(), a);
    const auto hi = std::lower_bound(beats.begin(), beats.end(), b);
    return std::span<const double>(lo, hi);
  };

  std::vector<FeatureWindow> out;
  for (Phase phase : kPhases) {
    const PhaseInterval& iv = session.markers[phase];
    std::optional<GsrDecomposition> gsr;
    if (session.gsr) {
      const auto& ch = *session.gsr;
      const Eigen::Index first = ch.index_of(iv.start);
      const Eigen::VectorXd part = ch.slice(iv.start, iv.stop);
      if (double(part.size()) >= GsrDecomposition::kMinDuration * ch.rate_hz - 0.5)
        gsr = gsr_decompose(part, ch.rate_hz, ch.t0 + double(first) / ch.rate_hz);
    }

    for (int k = 0;; ++k) {
      FeatureWindow w;
      w.phase = phase;
      w.start = iv.start + k * cfg.hop;
      w.stop = w.start + cfg.window;
      if (w.stop > iv.stop + 1e-9) break;

      if (have_beats) {
        const auto iv_ms = beat_intervals(beats_in(w.start, w.stop), gaps);
        if (iv_ms.size() >= 2) {
          const auto h = hr_rmssd(iv_ms);
          if (h.hr_bpm > 20.0 && h.hr_bpm < 240.0) {
            w.hr = h.hr_bpm;
            w.rmssd = h.rmssd_ms;
          }
        }
        const double c1 = std::min(iv.stop, std::max(w.stop, iv.start + LfPower::kMinDuration));
        const double c0 = c1 - LfPower::kMinDuration;
        if (c0 >= iv.start - 1e-9) {
          // Start from the last beat at or before c0 so the intervals cover the stretch.
          auto lo = std::upper_bound(beats.begin(), beats.end(), c0);
          if (lo != beats.begin()) --lo;
          const auto hi = std::upper_bound(beats.begin(), beats.end(), c1);
          if (hi > lo) {
            const auto iv_lf = beat_intervals(std::span<const double>(lo, hi), gaps);
            try {
              const auto lf = lf_power(iv_lf);
              w.lf_power = lf.lf_ms2;
              w.lf_fraction = lf.lf_fraction;
            } catch (const Error& e) {
              if (e.kind() != ErrorKind::InsufficientData) throw;
            }
          }
        }
      }

      if (session.respiration) {
        const auto& ch = *session.respiration;
        const Eigen::VectorXd part = ch.slice(w.start, w.stop);
        if (double(part.size()) >= RespirationEstimate::kMinDuration * ch.rate_hz - 0.5) {
          const auto est = respiration_rate(part, ch.rate_hz);
          if (est.valid) w.rr = est.rate_bpm;
        }
      } else if (session.breaths) {
        const auto& m = *session.breaths;
        const auto lo = std::lower_bound(m.begin(), m.end(), w.start);
        const auto hi = std::lower_bound(m.begin(), m.end(), w.stop);
        if (hi - lo >= 2 && *(hi - 1) - *lo >= RespirationEstimate::kMinDuration) {
          const auto est = respiration_rate_from_marks(std::span<const double>(lo, hi));
          if (est.valid) w.rr = est.rate_bpm;
        }
      }

      if (gsr) {
        const auto s = summarize_gsr(*gsr, w.start, w.stop);
        w.scl = s.scl_mean;
        w.scr_rate = s.scr_rate;
        w.scr_amplitude = s.scr_amplitude;
      }
      out.push_back(w);
    }
  }
  return out;
}

}  // namespace exobench
