#include "exobench/session_synth.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <cmath>
#include <numbers>
#include <random>

#include "exobench/blend_control.hpp"
#include "exobench/csv.hpp"
#include "exobench/eq_scoring.hpp"
#include "exobench/error.hpp"
#include "exobench/gait_sim.hpp"

namespace exobench::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Wave {
  double offset, amplitude, width;  // s, mV, s
};

// P, Q, R, S, T.
constexpr Wave kPqrst[] = {
    {-0.20, 0.15, 0.025}, {-0.025, -0.10, 0.010}, {0.0, 1.0, 0.010}, {0.025, -0.25, 0.010}, {0.25, 0.30, 0.050},
};

}  // namespace

std::vector<double> beat_times(const BeatModel& model, double start, double stop, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, model.jitter_ms / 1000.0);
  std::vector<double> out;
  for (double t = start; t < stop;) {
    out.push_back(t);
    const double base = 60.0 / model.hr_bpm(t);
    t += base * (1.0 + model.lf_depth * std::sin(kTwoPi * 0.1 * t) + model.hf_depth * std::sin(kTwoPi * 0.25 * t)) +
         jitter(rng);
  }
  return out;
}

Eigen::VectorXd ecg(std::span<const double> beats, double rate_hz, double t0, double duration) {
  const auto n = Eigen::Index(std::lround(duration * rate_hz));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (double b : beats)
    for (const Wave& w : kPqrst) {
      const double centre = b + w.offset;
      const auto lo = std::max<Eigen::Index>(0, Eigen::Index(std::floor((centre - 5.0 * w.width - t0) * rate_hz)));
      const auto hi = std::min<Eigen::Index>(n, Eigen::Index(std::ceil((centre + 5.0 * w.width - t0) * rate_hz)) + 1);
      for (Eigen::Index i = lo; i < hi; ++i) {
        const double u = (t0 + double(i) / rate_hz - centre) / w.width;
        x[i] += w.amplitude * std::exp(-0.5 * u * u);
      }
    }
  return x;
}

void add_noise(Eigen::VectorXd& x, double snr_db, std::uint64_t seed) {
  if (x.size() == 0) return;
  const double power = (x.array() - x.mean()).square().mean();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(power / std::pow(10.0, snr_db / 10.0)));
  for (auto& v : x) v += noise(rng);
}

Eigen::VectorXd respiration(const Profile& rate_bpm, double rate_hz, double t0, double duration) {
  const auto n = Eigen::Index(std::lround(duration * rate_hz));
  Eigen::VectorXd x(n);
  double phase = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = std::sin(phase);
    phase += kTwoPi * rate_bpm(t0 + double(i) / rate_hz) / 60.0 / rate_hz;
  }
  return x;
}

std::vector<double> breath_times(const Profile& rate_bpm, double start, double stop) {
  std::vector<double> out;
  for (double t = start; t < stop; t += 60.0 / rate_bpm(t)) out.push_back(t);
  return out;
}

Eigen::VectorXd gsr(const Profile& level_us, std::span<const double> scr_times, double amplitude_us, double rate_hz,
                    double t0, double duration) {
  constexpr double rise = 1.0, decay = 3.0;
  const auto n = Eigen::Index(std::lround(duration * rate_hz));
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = level_us(t0 + double(i) / rate_hz);
  for (double e : scr_times) {
    // Onset `rise` before the peak; raised-cosine rise then exponential decay.
    const auto lo = std::max<Eigen::Index>(0, Eigen::Index(std::floor((e - rise - t0) * rate_hz)));
    const auto hi = std::min<Eigen::Index>(n, Eigen::Index(std::ceil((e + 8.0 * decay - t0) * rate_hz)));
    for (Eigen::Index i = lo; i < hi; ++i) {
      const double t = t0 + double(i) / rate_hz - e;
      if (t < -rise) continue;
      x[i] += amplitude_us * (t < 0.0 ? 0.5 - 0.5 * std::cos(std::numbers::pi * (t + rise) / rise) : std::exp(-t / decay));
    }
  }
  return x;
}

std::vector<double> regular_events(double start, double stop, double per_minute) {
  std::vector<double> out;
  const double period = 60.0 / per_minute;
  for (double t = start + 0.5 * period; t < stop; t += period) out.push_back(t);
  return out;
}

namespace {

constexpr PhaseMarkers kProtocol{{0.0, 240.0}, {270.0, 390.0}, {420.0, 1380.0}};
constexpr double kWalkOnset = 405.0;  // midway between SIT-EXO and WALK
constexpr double kSteadyState = 180.0;

// Baseline before the walk, first-order rise toward base * (1 + gain) after.
Profile walk_profile(double base, double exo_offset, double gain) {
  return [=](double t) {
    if (t < 255.0) return base;
    if (t < kWalkOnset) return base + exo_offset;
    return base + exo_offset + base * gain * (1.0 - std::exp(-(t - kWalkOnset) / kSteadyState));
  };
}

// Random SCR times: a fixed rate per phase with jitter inside each slot.
std::vector<double> scr_times(std::mt19937_64& rng, double sit_rate, double walk_rate) {
  std::uniform_real_distribution<double> u(0.25, 0.75);
  std::vector<double> out;
  for (double t = 0.0; t < 1380.0;) {
    const double period = 60.0 / (t < kWalkOnset ? sit_rate : walk_rate);
    out.push_back(t + period * u(rng));
    t += period;
  }
  return out;
}

EqResponse questionnaire(const EqDefinition& def, const std::string& subject, std::mt19937_64& rng) {
  EqResponse r;
  r.subject = subject;
  std::uniform_int_distribution<int> lean(3, 5), spread(-2, 2), agree(-1, 1);
  std::map<std::string, int> centre;
  for (const auto& s : def.subfactors) centre[s.id] = lean(rng);
  auto raw_for = [](const EqItem& it, int adjusted) { return it.reversed ? 8 - adjusted : adjusted; };
  for (const auto& it : def.items) {
    if (it.control) continue;
    r.scores[it.id] = raw_for(it, std::clamp(centre[it.subfactor] + spread(rng), 1, 7));
  }
  for (const auto& c : def.controls) {
    const EqItem& orig = def.item(c.original);
    const EqItem& ctrl = def.item(c.control);
    const int adjusted = reverse_map(r.scores[orig.id], orig.reversed);
    r.scores[ctrl.id] = raw_for(ctrl, std::clamp(adjusted + agree(rng), 1, 7));
  }
  for (const auto& f : def.factors) {
    const auto subs = def.subfactors_of(f);
    for (std::size_t a = 0; a < subs.size(); ++a)
      for (std::size_t b = a + 1; b < subs.size(); ++b) {
        const int da = centre[subs[a]], db = centre[subs[b]];
        PairOutcome o{subs[a], subs[b], std::nullopt};
        if (da != db) o.winner = da > db ? subs[a] : subs[b];
        r.pairwise[f].push_back(o);
      }
  }
  return r;
}

}  // namespace

std::vector<std::filesystem::path> write_cohort(const std::filesystem::path& root, const CohortConfig& cfg) {
  if (cfg.subjects < 1) throw Error(ErrorKind::InvalidInput, "cohort needs at least one subject");
  const EqDefinition def = EqDefinition::synthetic_default();
  const GaitPattern pattern = GaitPattern::default_pattern();
  const GaitRegressor reg = train(build_training_set(generate_training_protocol(pattern, cfg.seed)));
  const double duration = kProtocol.walk.stop;

  std::vector<std::filesystem::path> dirs;
  for (int k = 1; k <= cfg.subjects; ++k) {
    char name[16];
    std::snprintf(name, sizeof name, "S%02d", k);
    const auto dir = root / name;
    std::mt19937_64 rng(cfg.seed * 1000003ull + std::uint64_t(k));
    std::uniform_real_distribution<double> u(0.0, 1.0);

    ProtocolSession s;
    s.dir = dir;
    s.physio.subject = name;
    s.physio.markers = kProtocol;

    BeatModel beats{walk_profile(74.0 + 10.0 * u(rng), 4.0, 0.38 + 0.12 * u(rng))};
    beats.lf_depth = 0.03 + 0.02 * u(rng);
    const auto bt = beat_times(beats, 0.3, duration, rng());
    Eigen::VectorXd ecg_wave = ecg(bt, cfg.ecg_rate, 0.0, duration);
    add_noise(ecg_wave, 20.0, rng());
    s.physio.ecg = UniformChannel{cfg.ecg_rate, 0.0, std::move(ecg_wave)};

    Eigen::VectorXd resp = respiration(walk_profile(15.0 + 4.0 * u(rng), 1.0, 0.5 + 0.2 * u(rng)), cfg.respiration_rate,
                                       0.0, duration);
    add_noise(resp, 15.0, rng());
    s.physio.respiration = UniformChannel{cfg.respiration_rate, 0.0, std::move(resp)};

    const auto events = scr_times(rng, 2.0 + u(rng), 3.0 + u(rng));
    Eigen::VectorXd g = gsr(walk_profile(3.0 + 2.0 * u(rng), 0.2, 0.2 + 0.2 * u(rng)), events, 0.1 + 0.1 * u(rng),
                            cfg.gsr_rate, 0.0, duration);
    s.physio.gsr = UniformChannel{cfg.gsr_rate, 0.0, std::move(g)};

    const std::vector<EqResponse> answers{questionnaire(def, name, rng)};
    csv::write_text(dir / "eq_responses.csv", responses_to_csv(answers));
    csv::write_text(dir / "eq_pairwise.csv", pairwise_to_csv(answers));
    s.responses = dir / "eq_responses.csv";
    s.pairwise = dir / "eq_pairwise.csv";

    if (cfg.controller_seconds > 0.0) {
      GaitPattern walk = pattern;
      walk.angle_noise = 0.0;  // encoder-grade angles at 5 kHz
      const auto frames = generate_cycle(walk, 5000.0, cfg.controller_seconds / pattern.cycle_period(), rng());
      ControlLoop loop(Calibration{}, reg);
      csv::write_text(dir / "commands.csv", commands_to_csv(replay(frames, loop).commands));
      s.commands = dir / "commands.csv";
    }
    save_session(s, dir);
    dirs.push_back(dir);
  }
  return dirs;
}

}  // namespace exobench::synth
