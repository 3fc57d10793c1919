#include "exobench/calibration.hpp"

#include "exobench/csv.hpp"

namespace exobench {

using nlohmann::json;

namespace {

json link_json(const LinkParams& l) {
  return {{"length", l.length}, {"mass", l.mass}, {"com_fraction", l.com_fraction}};
}

LinkParams link_from(const json& j, const LinkParams& fallback) {
  LinkParams l = fallback;
  l.length = j.value("length", l.length);
  l.mass = j.value("mass", l.mass);
  l.com_fraction = j.value("com_fraction", l.com_fraction);
  return l;
}

json table_json(const LookupTable1D& t) { return {{"breakpoints", t.breakpoints()}, {"values", t.values()}}; }

json tables_json(const std::array<std::optional<LookupTable1D>, 6>& tables) {
  json out = json::object();
  for (int j = 0; j < 6; ++j)
    if (tables[j]) out[std::string(joint_name(j))] = table_json(*tables[j]);
  return out;
}

std::array<std::optional<LookupTable1D>, 6> tables_from(const json& j, const char* what) {
  std::array<std::optional<LookupTable1D>, 6> out;
  if (!j.is_object()) throw Error(ErrorKind::Validation, std::string(what) + " must be an object");
  for (const auto& [name, t] : j.items()) {
    const int joint = joint_from_name(name);
    try {
      out[joint] = LookupTable1D(t.at("breakpoints").get<std::vector<double>>(),
                                 t.at("values").get<std::vector<double>>());
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Validation, std::string(what) + "." + name + ": " + e.what());
    }
  }
  for (int jnt = 0; jnt < 6; ++jnt)
    if (kActuatedMask[jnt] && !out[jnt])
      throw Error(ErrorKind::Configuration,
                  std::string(what) + ": missing table for actuated joint " + std::string(joint_name(jnt)));
  return out;
}

}  // namespace

json to_json(const Calibration& cal) {
  const auto& p = cal.params;
  return {{"schema_version", Calibration::kSchemaVersion},
          {"links",
           {{"back", link_json(p.back)},
            {"thigh", link_json(p.thigh)},
            {"shank", link_json(p.shank)},
            {"foot", link_json(p.foot)}}},
          {"gravity", p.gravity},
          {"friction", tables_json(cal.tables.friction)},
          {"ripple", tables_json(cal.tables.ripple)}};
}

Calibration calibration_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Validation, "calibration must be a JSON object");
  const int version = j.value("schema_version", -1);
  if (version != Calibration::kSchemaVersion)
    throw Error(ErrorKind::Validation,
                "calibration schema_version " + std::to_string(version) + " is not supported");
  Calibration cal;
  try {
    if (j.contains("links")) {
      const json& links = j.at("links");
      if (links.contains("back")) cal.params.back = link_from(links.at("back"), cal.params.back);
      if (links.contains("thigh")) cal.params.thigh = link_from(links.at("thigh"), cal.params.thigh);
      if (links.contains("shank")) cal.params.shank = link_from(links.at("shank"), cal.params.shank);
      if (links.contains("foot")) cal.params.foot = link_from(links.at("foot"), cal.params.foot);
    }
    cal.params.gravity = j.value("gravity", cal.params.gravity);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("calibration: ") + e.what());
  }
  cal.params.validate();
  if (j.contains("friction")) cal.tables.friction = tables_from(j.at("friction"), "friction");
  if (j.contains("ripple")) cal.tables.ripple = tables_from(j.at("ripple"), "ripple");
  return cal;
}

Calibration load_calibration(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(csv::read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  return calibration_from_json(j);
}

}  // namespace exobench
