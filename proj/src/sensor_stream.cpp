#include "exobench/sensor_stream.hpp"

#include <charconv>
#include <sstream>

#include "exobench/csv.hpp"

namespace exobench {

std::string StageTag::to_string() const {
  switch (kind) {
    case StageKind::Walk: return "walk";
    case StageKind::LeftSwing: return "left_swing";
    case StageKind::RightSwing: return "right_swing";
    case StageKind::Treadmill: return "treadmill_" + csv::format_number(speed_kmh);
  }
  return "walk";
}

StageTag StageTag::parse(std::string_view text) {
  if (text == "walk") return {StageKind::Walk, 0.0};
  if (text == "left_swing") return {StageKind::LeftSwing, 0.0};
  if (text == "right_swing") return {StageKind::RightSwing, 0.0};
  constexpr std::string_view prefix = "treadmill_";
  if (text.starts_with(prefix)) {
    const auto rest = text.substr(prefix.size());
    double speed = 0.0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), speed);
    if (ec == std::errc{} && ptr == rest.data() + rest.size() && speed >= 0.0)
      return {StageKind::Treadmill, speed};
  }
  throw Error(ErrorKind::Parse, "unknown stage tag '" + std::string(text) + "'");
}

std::string frames_to_csv(const std::vector<SensorFrame>& frames) {
  std::string out = "t,q_RH,q_RK,q_RA,q_LH,q_LK,q_LA,left_load,right_load,stage_tag\n";
  out.reserve(frames.size() * 120);
  for (const auto& f : frames) {
    out += csv::format_number(f.t);
    for (int j = 0; j < 6; ++j) {
      out += ',';
      out += csv::format_number(f.q[j]);
    }
    out += ',';
    out += csv::format_number(f.left_load);
    out += ',';
    out += csv::format_number(f.right_load);
    out += ',';
    out += f.stage.to_string();
    out += '\n';
  }
  return out;
}

std::vector<SensorFrame> frames_from_csv(const std::string& text, const std::string& origin) {
  const csv::Table table = csv::parse(text, origin);
  const std::size_t ct = table.column("t");
  static constexpr std::array<const char*, 6> qcols{"q_RH", "q_RK", "q_RA", "q_LH", "q_LK", "q_LA"};
  std::array<std::size_t, 6> cq{};
  for (int j = 0; j < 6; ++j) cq[j] = table.column(qcols[j]);
  const std::size_t cl = table.column("left_load");
  const std::size_t cr = table.column("right_load");
  const std::size_t cs = table.column("stage_tag");

  std::vector<SensorFrame> frames;
  frames.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    SensorFrame f;
    try {
      f.t = table.number(r, ct);
      for (int j = 0; j < 6; ++j) f.q[j] = table.number(r, cq[j]);
      f.left_load = table.number(r, cl);
      f.right_load = table.number(r, cr);
      f.stage = StageTag::parse(table.rows[r][cs]);
    } catch (const Error& e) {
      const std::string msg = e.what();
      if (msg.starts_with("line ")) throw Error(ErrorKind::Parse, origin + ": " + msg);
      throw Error(ErrorKind::Parse, origin + ": line " + std::to_string(table.source_line[r]) + ": " + msg);
    }
    if (!f.q.allFinite() || !std::isfinite(f.t) || !std::isfinite(f.left_load) || !std::isfinite(f.right_load))
      throw Error(ErrorKind::Parse, origin + ": line " + std::to_string(table.source_line[r]) +
                                        ": non-finite value");
    frames.push_back(f);
  }
  return frames;
}

void write_frames(const std::filesystem::path& path, const std::vector<SensorFrame>& frames) {
  csv::write_text(path, frames_to_csv(frames));
}

std::vector<SensorFrame> read_frames(const std::filesystem::path& path) {
  return frames_from_csv(csv::read_text(path), path.string());
}

}  // namespace exobench
