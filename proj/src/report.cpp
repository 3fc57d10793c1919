#include "exobench/report.hpp"

#include <algorithm>
#include <cstdio>

#include "exobench/blend_control.hpp"
#include "exobench/csv.hpp"
#include "exobench/error.hpp"

namespace exobench {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t BenchmarkReport::invalid_flags() const {
  std::size_t n = 0;
  if (physiological)
    for (const auto& w : *physiological) n += w.invalid().size();
  if (psychophysiological)
    for (const auto& s : psychophysiological->scores) n += std::size_t(std::count(s.degraded.begin(), s.degraded.end(), true));
  return n;
}

json BenchmarkReport::to_json() const {
  json j = {{"schema_version", kSchemaVersion}, {"subject", subject}, {"inputs", inputs}, {"skipped", skipped}};
  if (physiological) {
    json w = json::array();
    for (const auto& f : *physiological) w.push_back(f.to_json());
    j["physiological"] = {{"windows", w}};
  }
  if (psychophysiological) {
    json rows = json::array();
    for (std::size_t i = 0; i < psychophysiological->inputs.size(); ++i)
      rows.push_back({{"inputs", psychophysiological->inputs[i].to_json()},
                      {"scores", psychophysiological->scores[i].to_json()}});
    j["psychophysiological"] = {{"windows", rows}, {"mean", psychophysiological->mean.to_json()}};
  }
  if (questionnaire) j["questionnaire"] = questionnaire->to_json();
  if (controller) j["controller"] = controller->to_json();
  j["invalid_flags"] = invalid_flags();
  return j;
}

BenchmarkReport BenchmarkReport::from_json(const json& j) {
  BenchmarkReport r;
  try {
    if (j.value("schema_version", 0) != kSchemaVersion) throw Error(ErrorKind::Parse, "unsupported report schema_version");
    r.subject = j.at("subject").get<std::string>();
    r.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    r.skipped = j.at("skipped").get<std::map<std::string, std::string>>();
    if (j.contains("physiological")) {
      r.physiological.emplace();
      for (const auto& w : j["physiological"].at("windows")) r.physiological->push_back(FeatureWindow::from_json(w));
    }
    if (j.contains("psychophysiological")) {
      PsychophysiologicalSection p;
      for (const auto& row : j["psychophysiological"].at("windows")) {
        p.inputs.push_back(NormalizedInputs::from_json(row.at("inputs")));
        p.scores.push_back(PIScores::from_json(row.at("scores")));
      }
      p.mean = PIScores::from_json(j["psychophysiological"].at("mean"));
      r.psychophysiological = std::move(p);
    }
    if (j.contains("questionnaire")) r.questionnaire = FactorReport::from_json(j["questionnaire"]);
    if (j.contains("controller")) r.controller = ReplayReport::from_json(j["controller"]);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("report: ") + e.what());
  }
  return r;
}

std::string BenchmarkReport::dump() const { return to_json().dump(2) + "\n"; }

json BatchReport::to_json() const {
  json s = json::array();
  for (const auto& r : sessions) s.push_back(r.to_json());
  return {{"schema_version", BenchmarkReport::kSchemaVersion},
          {"sessions", s},
          {"questionnaire_summary", exobench::to_json(questionnaire)}};
}

BatchReport BatchReport::from_json(const json& j) {
  BatchReport b;
  for (const auto& s : j.at("sessions")) b.sessions.push_back(BenchmarkReport::from_json(s));
  b.questionnaire = stats_from_json(j.at("questionnaire_summary"));
  return b;
}

std::string BatchReport::dump() const { return to_json().dump(2) + "\n"; }

namespace {

bool has_channels(const PhysioSession& p) { return p.ecg || p.beats || p.respiration || p.breaths || p.gsr; }

}  // namespace

BenchmarkReport analyze_session(const ProtocolSession& session, const AnalysisConfig& cfg) {
  BenchmarkReport r;
  r.subject = session.physio.subject;
  for (const auto& f : session.inputs) r.inputs[f] = fnv1a_hex(csv::read_text(session.dir / f));

  if (has_channels(session.physio)) {
    r.physiological = windowed_features(session.physio, cfg.windows);
    std::vector<FeatureWindow> sit, walk;
    for (const auto& w : *r.physiological) {
      if (w.phase == Phase::Sit) sit.push_back(w);
      if (w.phase == Phase::Walk) walk.push_back(w);
    }
    try {
      PsychophysiologicalSection p;
      p.inputs = normalize(walk, sit, cfg.last_walk_windows);
      for (const auto& in : p.inputs) p.scores.push_back(infer(cfg.fuzzy, in));
      // Mean over rows; a PI is degraded in the summary if any row was.
      p.mean.value.fill(0.0);
      for (std::size_t k = 0; k < kPiOutputs.size(); ++k) {
        for (const auto& s : p.scores) {
          p.mean.value[k] += s.value[k] / double(p.scores.size());
          p.mean.degraded[k] = p.mean.degraded[k] || s.degraded[k];
        }
      }
      r.psychophysiological = std::move(p);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InsufficientData) throw;
      r.skipped["psychophysiological"] = e.what();
    }
  } else {
    r.skipped["physiological"] = "no physiological channels";
    r.skipped["psychophysiological"] = "no physiological channels";
  }

  if (session.responses) {
    const auto responses = read_responses(*session.responses, session.pairwise);
    const auto it = responses.find(r.subject);
    if (it == responses.end())
      throw Error(ErrorKind::IncompleteResponse, "no questionnaire answers for subject '" + r.subject + "'");
    r.questionnaire = score_session(it->second, cfg.questionnaire);
  } else {
    r.skipped["questionnaire"] = "no questionnaire responses";
  }

  if (session.commands) {
    const auto commands = commands_from_csv(csv::read_text(*session.commands), session.commands->string());
    r.controller = summarize(commands);
  } else {
    r.skipped["controller"] = "no controller command log";
  }
  return r;
}

BatchReport analyze_tree(const fs::path& dir, bool lenient, const AnalysisConfig& cfg) {
  BatchReport b;
  std::vector<fs::path> dirs;
  if (fs::exists(dir / "manifest.json")) {
    dirs.push_back(dir);
  } else {
    if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "not a session directory: " + dir.string());
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_directory() && fs::exists(e.path() / "manifest.json")) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
  }
  if (dirs.empty()) throw Error(ErrorKind::Io, "no session manifests under " + dir.string());

  std::vector<FactorReport> factor_reports;
  for (const auto& d : dirs) {
    b.sessions.push_back(analyze_session(load_session(d, lenient), cfg));
    if (b.sessions.back().questionnaire) factor_reports.push_back(*b.sessions.back().questionnaire);
  }
  b.questionnaire = batch_summary(factor_reports);
  return b;
}

}  // namespace exobench
