#include "exobench/physio_session.hpp"

#include <cmath>

#include "exobench/csv.hpp"
#include "exobench/error.hpp"

namespace exobench {

namespace fs = std::filesystem;
using nlohmann::json;

Eigen::VectorXd UniformChannel::slice(double start, double stop) const {
  const Eigen::Index a = index_of(start);
  const Eigen::Index b = index_of(stop);
  return values.segment(a, std::max<Eigen::Index>(0, b - a));
}

Eigen::Index UniformChannel::index_of(double t) const {
  const double i = std::ceil((t - t0) * rate_hz - 1e-9);
  return Eigen::Index(std::clamp(i, 0.0, double(values.size())));
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Sit: return "sit";
    case Phase::SitExo: return "sit_exo";
    case Phase::Walk: return "walk";
  }
  return "sit";
}

const PhaseInterval& PhaseMarkers::operator[](Phase p) const {
  switch (p) {
    case Phase::Sit: return sit;
    case Phase::SitExo: return sit_exo;
    case Phase::Walk: return walk;
  }
  return sit;
}

void PhaseMarkers::validate(bool lenient) const {
  for (Phase p : kPhases) {
    const auto& iv = (*this)[p];
    if (!std::isfinite(iv.start) || !std::isfinite(iv.stop) || !(iv.stop > iv.start))
      throw Error(ErrorKind::Validation, "phase " + std::string(to_string(p)) + " must have start < stop");
  }
  if (sit.stop > sit_exo.start || sit_exo.stop > walk.start)
    throw Error(ErrorKind::Validation, "phase markers must be ordered sit < sit_exo < walk");
  if (lenient) return;
  auto check = [](const PhaseInterval& iv, double expected, const char* name) {
    if (std::abs(iv.duration() - expected) > kDurationTolerance * expected)
      throw Error(ErrorKind::Validation, std::string(name) + " lasts " + csv::format_number(iv.duration()) +
                                             " s, protocol expects " + csv::format_number(expected) +
                                             " s +-5% (use --lenient to skip)");
  };
  check(sit, kSitDuration, "sit");
  check(walk, kWalkDuration, "walk");
}

void PhysioSession::validate(bool lenient) const {
  markers.validate(lenient);
  auto check = [](const std::optional<UniformChannel>& c, double min_rate, const char* name) {
    if (!c) return;
    if (!(c->rate_hz >= min_rate))
      throw Error(ErrorKind::Validation, std::string(name) + " rate must be >= " + csv::format_number(min_rate) + " Hz");
    if (!c->values.allFinite()) throw Error(ErrorKind::DataQuality, std::string(name) + " contains non-finite samples");
  };
  check(ecg, kMinEcgRate, "ecg");
  check(respiration, kMinRespirationRate, "respiration");
  check(gsr, kMinGsrRate, "gsr");
  auto check_marks = [](const std::optional<std::vector<double>>& m, const char* name) {
    if (!m) return;
    for (std::size_t i = 1; i < m->size(); ++i)
      if (!((*m)[i] > (*m)[i - 1])) throw Error(ErrorKind::DataQuality, std::string(name) + " timestamps must increase");
  };
  check_marks(beats, "beats");
  check_marks(breaths, "breaths");
}

namespace {

void write_values(const fs::path& path, const double* data, std::size_t n) {
  std::string out = "value\n";
  out.reserve(n * 12);
  for (std::size_t i = 0; i < n; ++i) {
    out += csv::format_number(data[i]);
    out += '\n';
  }
  csv::write_text(path, out);
}

json interval_json(const PhaseInterval& iv) { return json::array({iv.start, iv.stop}); }

PhaseInterval interval_from(const json& j, const char* name) {
  if (!j.contains(name) || !j[name].is_array() || j[name].size() != 2)
    throw Error(ErrorKind::Parse, std::string("manifest markers.") + name + " must be [start, stop]");
  return {j[name][0].get<double>(), j[name][1].get<double>()};
}

}  // namespace

ProtocolSession load_session(const fs::path& dir, bool lenient) {
  ProtocolSession s;
  s.dir = dir;
  json m;
  try {
    m = json::parse(csv::read_text(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, (dir / "manifest.json").string() + ": " + e.what());
  }
  s.inputs.push_back("manifest.json");
  try {
    if (m.value("schema_version", 0) != ProtocolSession::kSchemaVersion)
      throw Error(ErrorKind::Parse, "unsupported manifest schema_version");
    s.physio.subject = m.value("subject", dir.filename().string());
    const json& mk = m.at("markers");
    s.physio.markers = {interval_from(mk, "sit"), interval_from(mk, "sit_exo"), interval_from(mk, "walk")};

    const json channels = m.value("channels", json::object());
    auto uniform = [&](const char* name) -> std::optional<UniformChannel> {
      if (!channels.contains(name)) return std::nullopt;
      const json& c = channels[name];
      const std::string file = c.at("file").get<std::string>();
      const auto v = csv::read_column(dir / file);
      s.inputs.push_back(file);
      UniformChannel ch;
      ch.rate_hz = c.at("rate_hz").get<double>();
      ch.t0 = c.value("t0", 0.0);
      ch.values = Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
      return ch;
    };
    auto marks = [&](const char* name) -> std::optional<std::vector<double>> {
      if (!channels.contains(name)) return std::nullopt;
      const std::string file = channels[name].at("file").get<std::string>();
      s.inputs.push_back(file);
      return csv::read_column(dir / file);
    };
    s.physio.ecg = uniform("ecg");
    s.physio.beats = marks("beats");
    s.physio.respiration = uniform("respiration");
    s.physio.breaths = marks("breaths");
    s.physio.gsr = uniform("gsr");

    auto link = [&](const char* section, const char* key) -> std::optional<fs::path> {
      if (!m.contains(section) || !m[section].contains(key)) return std::nullopt;
      const std::string file = m[section][key].get<std::string>();
      s.inputs.push_back(file);
      return dir / file;
    };
    s.responses = link("questionnaire", "responses");
    s.pairwise = link("questionnaire", "pairwise");
    s.commands = link("controller", "commands");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, (dir / "manifest.json").string() + ": " + e.what());
  }
  s.physio.validate(lenient);
  return s;
}

void save_session(const ProtocolSession& session, const fs::path& dir) {
  const PhysioSession& p = session.physio;
  json channels = json::object();
  auto put_uniform = [&](const std::optional<UniformChannel>& c, const char* name, const char* unit) {
    if (!c) return;
    const std::string file = std::string(name) + ".csv";
    write_values(dir / file, c->values.data(), std::size_t(c->values.size()));
    channels[name] = {{"file", file}, {"rate_hz", c->rate_hz}, {"t0", c->t0}, {"unit", unit}};
  };
  auto put_marks = [&](const std::optional<std::vector<double>>& m, const char* name) {
    if (!m) return;
    const std::string file = std::string(name) + ".csv";
    write_values(dir / file, m->data(), m->size());
    channels[name] = {{"file", file}, {"unit", "s"}};
  };
  put_uniform(p.ecg, "ecg", "mV");
  put_marks(p.beats, "beats");
  put_uniform(p.respiration, "respiration", "a.u.");
  put_marks(p.breaths, "breaths");
  put_uniform(p.gsr, "gsr", "uS");

  json m = {{"schema_version", ProtocolSession::kSchemaVersion},
            {"subject", p.subject},
            {"markers",
             {{"sit", interval_json(p.markers.sit)},
              {"sit_exo", interval_json(p.markers.sit_exo)},
              {"walk", interval_json(p.markers.walk)}}},
            {"channels", channels}};
  auto rel = [&](const fs::path& f) { return f.lexically_relative(session.dir.empty() ? dir : session.dir).generic_string(); };
  if (session.responses) m["questionnaire"]["responses"] = rel(*session.responses);
  if (session.pairwise) m["questionnaire"]["pairwise"] = rel(*session.pairwise);
  if (session.commands) m["controller"]["commands"] = rel(*session.commands);
  csv::write_text(dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace exobench
