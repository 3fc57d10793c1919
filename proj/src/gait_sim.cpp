#include "exobench/gait_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace exobench {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_cycle(double phi) { return phi - std::floor(phi); }

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * double(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

json template_json(const JointTemplate& t) {
  json terms = json::array();
  for (const auto& h : t.terms) terms.push_back({{"order", h.order}, {"amplitude", h.amplitude}, {"center", h.center}});
  return {{"mean", t.mean}, {"terms", terms}};
}

JointTemplate template_from(const json& j) {
  JointTemplate t;
  t.mean = j.at("mean").get<double>();
  for (const auto& h : j.at("terms"))
    t.terms.push_back({h.at("order").get<int>(), h.at("amplitude").get<double>(), h.at("center").get<double>()});
  return t;
}

/// Adds sensor noise and emits a frame.
class FrameSampler {
 public:
  FrameSampler(const GaitPattern& p, std::uint64_t seed) : pattern_(p), rng_(seed) {}

  SensorFrame sample(double t, double phi, StageTag stage) {
    SensorFrame f;
    f.t = t;
    f.stage = stage;
    f.q = pattern_.joint_angles(phi);
    if (pattern_.angle_noise > 0.0) {
      std::normal_distribution<double> n(0.0, pattern_.angle_noise);
      for (int j = 0; j < 6; ++j) f.q[j] += n(rng_);
    }
    const double label = pattern_.phase_label(phi);
    f.left_load = noisy_load(pattern_.body_load * 0.5 * (1.0 + label));
    f.right_load = noisy_load(pattern_.body_load * 0.5 * (1.0 - label));
    return f;
  }

 private:
  double noisy_load(double load) {
    if (load <= 0.0 || pattern_.load_noise <= 0.0) return std::max(load, 0.0);
    std::normal_distribution<double> n(0.0, pattern_.load_noise);
    return std::max(0.0, load * (1.0 + n(rng_)));
  }

  const GaitPattern& pattern_;
  std::mt19937_64 rng_;
};

}  // namespace

double JointTemplate::operator()(double phi) const {
  double v = mean;
  for (const auto& h : terms) v += h.amplitude * std::cos(kTwoPi * h.order * (phi - h.center));
  return v;
}

std::pair<double, double> JointTemplate::range() const {
  double lo = (*this)(0.0), hi = lo;
  constexpr int kSamples = 2000;
  for (int i = 1; i < kSamples; ++i) {
    const double v = (*this)(double(i) / kSamples);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

GaitPattern GaitPattern::default_pattern() {
  GaitPattern p;
  // Odd harmonics are centred on the left single-support window so that the
  // left-right joint differences carry the shape of the load-share label.
  const double c = 0.25 + p.double_support / 4.0;
  p.hip = {0.12, {{1, 0.33, 0.0}, {3, 0.03, c}}};
  p.knee = {0.55, {{1, 0.40, 0.72}, {3, -0.08, c}, {5, 0.03, c}}};
  p.ankle = {0.02, {{1, 0.12, 0.45}, {3, -0.06, c}, {5, 0.02, c}}};
  return p;
}

void GaitPattern::validate() const {
  if (!(cadence > 0.0)) throw Error(ErrorKind::Validation, "cadence must be > 0");
  if (!(double_support >= 0.0 && double_support <= 0.4))
    throw Error(ErrorKind::Validation, "double-support fraction must lie in [0, 0.4]");
  const auto [hip_lo, hip_hi] = hip.range();
  if (hip_lo < -0.7 || hip_hi > 0.7) throw Error(ErrorKind::Validation, "hip trajectory exceeds |0.7| rad");
  const auto [knee_lo, knee_hi] = knee.range();
  if (knee_lo < 0.0 || knee_hi > 1.3) throw Error(ErrorKind::Validation, "knee trajectory leaves [0, 1.3] rad");
  const auto [ankle_lo, ankle_hi] = ankle.range();
  if (ankle_lo < -0.7 || ankle_hi > 0.7) throw Error(ErrorKind::Validation, "ankle trajectory exceeds |0.7| rad");
  if (!(body_load > 0.0)) throw Error(ErrorKind::Validation, "body load must be > 0");
  if (angle_noise < 0.0 || load_noise < 0.0) throw Error(ErrorKind::Validation, "noise levels must be >= 0");
  if (!(treadmill_speed_kmh >= 0.0)) throw Error(ErrorKind::Validation, "treadmill speed must be >= 0");
}

double GaitPattern::phase_label(double phi) const {
  const double p = wrap_cycle(phi);
  const double h = 0.5 * double_support;
  if (p < h) return -1.0 + 2.0 * p / h;
  if (p < 0.5) return 1.0;
  if (p < 0.5 + h) return 1.0 - 2.0 * (p - 0.5) / h;
  return -1.0;
}

Vector6d GaitPattern::joint_angles(double phi) const {
  const double left = wrap_cycle(phi);
  const double right = wrap_cycle(phi + 0.5);
  Vector6d q;
  q[kRH] = hip(right);
  q[kRK] = knee(right);
  q[kRA] = ankle(right);
  q[kLH] = hip(left);
  q[kLK] = knee(left);
  q[kLA] = ankle(left);
  return q;
}

json GaitPattern::to_json() const {
  return {{"cadence", cadence},
          {"hip", template_json(hip)},
          {"knee", template_json(knee)},
          {"ankle", template_json(ankle)},
          {"double_support", double_support},
          {"treadmill_speed_kmh", treadmill_speed_kmh},
          {"body_load", body_load},
          {"angle_noise", angle_noise},
          {"load_noise", load_noise}};
}

GaitPattern GaitPattern::from_json(const json& j) {
  GaitPattern p = default_pattern();
  try {
    p.cadence = j.value("cadence", p.cadence);
    if (j.contains("hip")) p.hip = template_from(j.at("hip"));
    if (j.contains("knee")) p.knee = template_from(j.at("knee"));
    if (j.contains("ankle")) p.ankle = template_from(j.at("ankle"));
    p.double_support = j.value("double_support", p.double_support);
    p.treadmill_speed_kmh = j.value("treadmill_speed_kmh", p.treadmill_speed_kmh);
    p.body_load = j.value("body_load", p.body_load);
    p.angle_noise = j.value("angle_noise", p.angle_noise);
    p.load_noise = j.value("load_noise", p.load_noise);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("gait pattern: ") + e.what());
  }
  p.validate();
  return p;
}

std::vector<SensorFrame> generate_cycle(const GaitPattern& pattern, double rate_hz, double cycles,
                                        std::uint64_t seed) {
  pattern.validate();
  if (!(rate_hz >= 100.0)) throw Error(ErrorKind::Validation, "sample rate must be >= 100 Hz");
  if (!(cycles > 0.0)) throw Error(ErrorKind::Validation, "cycle count must be > 0");
  const double period = pattern.cycle_period();
  const auto n = static_cast<std::size_t>(std::llround(cycles * period * rate_hz));
  FrameSampler sampler(pattern, seed);
  std::vector<SensorFrame> frames;
  frames.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = double(i) / rate_hz;
    frames.push_back(sampler.sample(t, t / period, StageTag{StageKind::Walk, 0.0}));
  }
  return frames;
}

std::vector<double> treadmill_speeds() { return {1.0, 1.5, 2.0, 2.5, 3.0}; }

std::vector<SensorFrame> generate_training_protocol(const GaitPattern& pattern, std::uint64_t seed,
                                                    double rate_hz) {
  pattern.validate();
  if (!(rate_hz >= 100.0)) throw Error(ErrorKind::Validation, "sample rate must be >= 100 Hz");
  constexpr int kSwings = 3;
  constexpr double kSwingPeriod = 10.0 / 3.0;  // s per full swing
  constexpr double kSegment = 20.0;             // s per treadmill speed
  constexpr double kReferenceSpeed = 2.0;       // km/h at which cadence is nominal

  FrameSampler sampler(pattern, seed);
  std::vector<SensorFrame> frames;
  double t = 0.0;
  const double dt = 1.0 / rate_hz;

  // A swing sweeps the swinging leg back and forth through its own swing
  // phase while the other foot stays in single support.
  const double h = 0.5 * pattern.double_support;
  auto swing_stage = [&](StageKind kind, double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    const double half = 0.49 * (hi - lo);
    const auto n = static_cast<std::size_t>(std::llround(kSwings * kSwingPeriod * rate_hz));
    for (std::size_t i = 0; i < n; ++i, t += dt) {
      const double local = double(i) * dt;
      const double phi = mid + half * std::sin(2.0 * std::numbers::pi * local / kSwingPeriod);
      frames.push_back(sampler.sample(t, phi, StageTag{kind, 0.0}));
    }
  };
  swing_stage(StageKind::LeftSwing, 0.5 + h, 1.0);  // left leg in the air
  swing_stage(StageKind::RightSwing, h, 0.5);       // right leg in the air

  double phi = 0.0;
  for (double speed : treadmill_speeds()) {
    const double cadence = pattern.cadence * (0.5 + 0.5 * speed / kReferenceSpeed);
    const double period = 120.0 / cadence;
    const auto n = static_cast<std::size_t>(std::llround(kSegment * rate_hz));
    for (std::size_t i = 0; i < n; ++i, t += dt) {
      frames.push_back(sampler.sample(t, phi, StageTag{StageKind::Treadmill, speed}));
      phi += dt / period;
    }
  }
  return frames;
}

json ReplayReport::to_json() const {
  return {{"timing",
           {{"steps", timing.steps},
            {"p50_us", timing.p50_us},
            {"p95_us", timing.p95_us},
            {"p99_us", timing.p99_us},
            {"max_us", timing.max_us},
            {"mean_us", timing.mean_us}}},
          {"smoothness",
           {{"jumps", smoothness.jumps},
            {"median_jump_nm", smoothness.median_jump},
            {"max_jump_nm", smoothness.max_jump},
            {"max_over_median", smoothness.max_over_median},
            {"lipschitz_nm_per_s", smoothness.lipschitz}}}};
}

ReplayReport ReplayReport::from_json(const json& j) {
  ReplayReport r;
  const json& t = j.at("timing");
  r.timing = {t.at("steps").get<std::size_t>(), t.at("p50_us").get<double>(), t.at("p95_us").get<double>(),
              t.at("p99_us").get<double>(),     t.at("max_us").get<double>(), t.at("mean_us").get<double>()};
  const json& s = j.at("smoothness");
  r.smoothness = {s.at("jumps").get<std::size_t>(), s.at("median_jump_nm").get<double>(),
                  s.at("max_jump_nm").get<double>(), s.at("max_over_median").get<double>(),
                  s.at("lipschitz_nm_per_s").get<double>()};
  return r;
}

ReplayReport summarize(std::span<const AssistCommand> commands) {
  ReplayReport report;
  std::vector<double> times;
  times.reserve(commands.size());
  double sum = 0.0;
  for (const auto& c : commands) {
    times.push_back(c.step_time_us);
    sum += c.step_time_us;
  }
  report.timing.steps = commands.size();
  if (!times.empty()) {
    report.timing.mean_us = sum / double(times.size());
    report.timing.max_us = *std::max_element(times.begin(), times.end());
    report.timing.p50_us = percentile(times, 0.50);
    report.timing.p95_us = percentile(times, 0.95);
    report.timing.p99_us = percentile(times, 0.99);
  }

  std::vector<double> jumps;
  double lipschitz = 0.0;
  for (std::size_t i = 1; i < commands.size(); ++i) {
    const auto& a = commands[i - 1];
    const auto& b = commands[i];
    if (a.degraded || b.degraded || !(b.t > a.t)) continue;
    double jump = 0.0;
    for (int j = 0; j < 6; ++j)
      if (kActuatedMask[j]) jump = std::max(jump, std::abs(b.tau[j] - a.tau[j]));
    jumps.push_back(jump);
    lipschitz = std::max(lipschitz, jump / (b.t - a.t));
  }
  auto& s = report.smoothness;
  s.jumps = jumps.size();
  if (!jumps.empty()) {
    s.median_jump = percentile(jumps, 0.5);
    s.max_jump = *std::max_element(jumps.begin(), jumps.end());
    s.max_over_median = s.median_jump > 0.0 ? s.max_jump / s.median_jump : 0.0;
    s.lipschitz = lipschitz;
  }
  return report;
}

ReplayResult replay(std::span<const SensorFrame> frames, ControlLoop& loop) {
  ReplayResult result;
  result.commands.reserve(frames.size());
  for (const auto& f : frames) result.commands.push_back(loop.step(f));
  result.report = summarize(result.commands);
  return result;
}

}  // namespace exobench
