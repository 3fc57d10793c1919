// exobench: simulation, controller training/replay and benchmark analysis.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "exobench/blend_control.hpp"
#include "exobench/calibration.hpp"
#include "exobench/csv.hpp"
#include "exobench/error.hpp"
#include "exobench/gait_segmentation.hpp"
#include "exobench/gait_sim.hpp"
#include "exobench/report.hpp"
#include "exobench/session_synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace exobench;

namespace {

/// Settings file shared by all subcommands. Sections may be inline objects
/// or paths relative to the settings file.
class Settings {
 public:
  explicit Settings(const std::string& flag) {
    std::string path = flag;
    if (path.empty())
      if (const char* env = std::getenv("EXOBENCH_CONFIG")) path = env;
    if (path.empty()) return;
    base_ = fs::path(path).parent_path();
    try {
      doc_ = json::parse(csv::read_text(path));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, path + ": " + e.what());
    }
  }

  /// Inline object, or the parsed contents of the referenced file.
  std::optional<json> section(const char* key) const {
    if (!doc_.contains(key)) return std::nullopt;
    const json& v = doc_[key];
    if (!v.is_string()) return v;
    const fs::path file = base_ / v.get<std::string>();
    try {
      return json::parse(csv::read_text(file));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, file.string() + ": " + e.what());
    }
  }

  GaitPattern pattern() const {
    const auto s = section("gait_pattern");
    return s ? GaitPattern::from_json(*s) : GaitPattern::default_pattern();
  }
  LoopConfig loop() const {
    const auto s = section("loop");
    return s ? LoopConfig::from_json(*s) : LoopConfig{};
  }
  Calibration calibration() const {
    const auto s = section("calibration");
    return s ? calibration_from_json(*s) : Calibration{};
  }
  AnalysisConfig analysis() const {
    AnalysisConfig cfg;
    if (const auto s = section("fuzzy_model")) cfg.fuzzy = FuzzyModel::from_json(*s);
    if (const auto s = section("questionnaire")) cfg.questionnaire = EqDefinition::from_json(*s);
    if (const auto s = section("windows")) {
      cfg.windows.window = s->value("window", cfg.windows.window);
      cfg.windows.hop = s->value("hop", cfg.windows.hop);
    }
    if (doc_.contains("last_walk_windows")) cfg.last_walk_windows = doc_["last_walk_windows"].get<std::size_t>();
    return cfg;
  }

 private:
  json doc_ = json::object();
  fs::path base_;
};

void require_out(const std::string& out, const char* what) {
  if (out.empty()) throw Error(ErrorKind::InvalidInput, std::string("--out is required for ") + what);
}

void write_or_print(const std::string& out, const std::string& text) {
  if (out.empty())
    std::cout << text;
  else
    csv::write_text(out, text);
}

// Guess what a JSON file holds from its top-level keys and validate it.
std::string validate_file(const fs::path& path, bool lenient) {
  if (fs::is_directory(path)) {
    load_session(path, lenient);
    return "session directory";
  }
  if (path.extension() == ".csv") {
    read_frames(path);
    return "sensor stream";
  }
  json j;
  try {
    j = json::parse(csv::read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  try {
    if (j.contains("items")) {
      EqDefinition::from_json(j);
      return "questionnaire definition";
    }
    if (j.contains("rules")) {
      FuzzyModel::from_json(j);
      return "fuzzy model";
    }
    if (j.contains("links")) {
      calibration_from_json(j);
      return "calibration";
    }
    if (j.contains("markers")) {
      load_session(path.parent_path(), lenient);
      return "session manifest";
    }
    if (j.contains("model") && j["model"] == "gait_regressor") {
      GaitRegressor::from_json(j);
      return "gait regressor";
    }
    if (j.contains("cadence")) {
      GaitPattern::from_json(j).validate();
      return "gait pattern";
    }
    if (j.contains("rate_hz") || j.contains("degraded_policy")) {
      LoopConfig::from_json(j);
      return "loop config";
    }
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
  throw Error(ErrorKind::Validation, path.string() + ": unrecognised file");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wearable Walker blend control and EXPERIENCE benchmarking"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path, out;
  std::uint64_t seed = 1;
  bool lenient = false;
  app.add_option("--config", config_path, "settings JSON (falls back to $EXOBENCH_CONFIG)");
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_flag("--lenient", lenient, "skip protocol duration checks");
  app.add_option("--out", out, "output file or directory");

  auto* sim = app.add_subcommand("sim", "generate synthetic data");
  sim->require_subcommand(1);
  auto* sim_training = sim->add_subcommand("training", "training protocol stream (swings + treadmill sweep)");
  double training_rate = 100.0;
  sim_training->add_option("--rate", training_rate, "sample rate, Hz")->capture_default_str();
  auto* sim_walk = sim->add_subcommand("walk", "steady walking stream");
  double walk_seconds = 10.0, walk_rate = 5000.0, walk_angle_noise = 0.0;
  sim_walk->add_option("--seconds", walk_seconds, "duration, s")->capture_default_str();
  sim_walk->add_option("--rate", walk_rate, "sample rate, Hz")->capture_default_str();
  sim_walk->add_option("--angle-noise", walk_angle_noise,
                       "encoder noise, rad; replaces the pattern value, which suits 100 Hz data")
      ->capture_default_str();
  auto* sim_session = sim->add_subcommand("session", "synthetic subject sessions for analyze");
  synth::CohortConfig cohort;
  sim_session->add_option("--subjects", cohort.subjects, "number of subjects")->capture_default_str();
  sim_session->add_option("--controller-seconds", cohort.controller_seconds, "command log length, s")
      ->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "fit the gait-phase regressor");
  std::string train_data;
  std::optional<double> ridge;
  train_cmd->add_option("data", train_data, "training protocol CSV")->required();
  train_cmd->add_option("--ridge", ridge, "ridge parameter (default: scaled trace)");

  auto* replay_cmd = app.add_subcommand("replay", "run a stream through the 5 kHz control loop");
  std::string stream_path, model_path, calibration_path, report_path;
  replay_cmd->add_option("stream", stream_path, "sensor stream CSV")->required();
  replay_cmd->add_option("--model", model_path, "gait regressor JSON")->required();
  replay_cmd->add_option("--calibration", calibration_path, "calibration JSON (overrides settings)");
  replay_cmd->add_option("--report", report_path, "timing/smoothness report JSON (default: stdout)");

  auto* analyze_cmd = app.add_subcommand("analyze", "benchmark report for a session or a directory of sessions");
  std::string session_dir;
  analyze_cmd->add_option("session", session_dir, "session directory")->required();

  auto* validate_cmd = app.add_subcommand("validate", "check configuration, definition and session files");
  std::vector<std::string> files;
  validate_cmd->add_option("files", files, "files or session directories")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const Settings settings(config_path);

    if (sim_training->parsed()) {
      require_out(out, "sim training");
      const auto frames = generate_training_protocol(settings.pattern(), seed, training_rate);
      write_frames(out, frames);
      std::cout << "wrote " << frames.size() << " frames to " << out << "\n";
    } else if (sim_walk->parsed()) {
      require_out(out, "sim walk");
      auto pattern = settings.pattern();
      pattern.angle_noise = walk_angle_noise;
      const auto frames = generate_cycle(pattern, walk_rate, walk_seconds / pattern.cycle_period(), seed);
      write_frames(out, frames);
      std::cout << "wrote " << frames.size() << " frames to " << out << "\n";
    } else if (sim_session->parsed()) {
      require_out(out, "sim session");
      cohort.seed = seed;
      const auto dirs = synth::write_cohort(out, cohort);
      std::cout << "wrote " << dirs.size() << " sessions under " << out << "\n";
    } else if (train_cmd->parsed()) {
      require_out(out, "train");
      const auto set = build_training_set(read_frames(train_data));
      const auto reg = train(set, ridge);
      reg.save(out);
      std::cout << "samples " << reg.samples << "\nrmse " << reg.rmse << "\nmodel " << out << "\n";
    } else if (replay_cmd->parsed()) {
      require_out(out, "replay");
      const Calibration cal = calibration_path.empty() ? settings.calibration() : load_calibration(calibration_path);
      ControlLoop loop(cal, GaitRegressor::load(model_path), settings.loop());
      const auto result = replay(read_frames(stream_path), loop);
      csv::write_text(out, commands_to_csv(result.commands));
      write_or_print(report_path, result.report.to_json().dump(2) + "\n");
      std::cerr << "commands " << result.commands.size() << " p50 " << result.report.timing.p50_us << " us p95 "
                << result.report.timing.p95_us << " us\n";
    } else if (analyze_cmd->parsed()) {
      const auto cfg = settings.analysis();
      const auto batch = analyze_tree(session_dir, lenient, cfg);
      write_or_print(out, batch.dump());
      if (!out.empty()) {
        std::vector<FactorReport> reports;
        for (const auto& s : batch.sessions)
          if (s.questionnaire) reports.push_back(*s.questionnaire);
        if (!reports.empty()) std::cout << format_table(reports, cfg.questionnaire.factors);
        std::size_t flags = 0;
        for (const auto& s : batch.sessions) flags += s.invalid_flags();
        std::cout << batch.sessions.size() << " sessions, " << flags << " invalid flags\n";
      }
    } else if (validate_cmd->parsed()) {
      int failures = 0;
      for (const auto& f : files) {
        try {
          std::cout << "ok " << f << " (" << validate_file(f, lenient) << ")\n";
        } catch (const Error& e) {
          std::cerr << "error " << e.what() << "\n";
          ++failures;
        }
      }
      return failures ? 1 : 0;
    }
  } catch (const Error& e) {
    std::cerr << "exobench: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return e.kind() == ErrorKind::IncompleteTraining ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "exobench: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
