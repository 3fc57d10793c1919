#include "exobench/pi_engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "exobench/csv.hpp"
#include "exobench/error.hpp"

namespace exobench {

using nlohmann::json;

namespace {

std::optional<double> feature(const FeatureWindow& w, std::size_t input) {
  switch (input) {
    case 0: return w.hr;
    case 1: return w.rmssd;
    case 2: return w.rr;
    case 3: return w.scr_rate;
    case 4: return w.scl;
    case 5: return w.lf_fraction;
  }
  return std::nullopt;
}

template <std::size_t N>
int index_of(const std::array<std::string_view, N>& names, std::string_view name) {
  const auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : int(it - names.begin());
}

const FuzzyVariable* find(const std::vector<FuzzyVariable>& vars, std::string_view name) {
  for (const auto& v : vars)
    if (v.name == name) return &v;
  return nullptr;
}

double membership(const FuzzyVariable& v, Level l, double x) {
  const auto& t = v.sets[std::size_t(l)];
  return t ? (*t)(x) : 0.0;
}

void check_variable(const FuzzyVariable& v) {
  const std::string& n = v.name;
  if (!(v.hi > v.lo)) throw Error(ErrorKind::Validation, n + ": range must satisfy lo < hi");
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& t = v.sets[k];
    if (t && !(t->left <= t->peak && t->peak <= t->right && t->left < t->right))
      throw Error(ErrorKind::Validation, n + ": " + std::string(to_string(Level(k))) + " set needs left <= peak <= right");
  }
  // Dense grid plus every breakpoint inside the range.
  std::vector<double> probe;
  for (int i = 0; i < 4001; ++i) probe.push_back(v.lo + (v.hi - v.lo) * i / 4000.0);
  for (const auto& t : v.sets)
    if (t)
      for (double x : {t->left, t->peak, t->right})
        if (x >= v.lo && x <= v.hi) probe.push_back(x);
  for (double x : probe) {
    const bool covered = std::any_of(v.sets.begin(), v.sets.end(), [&](const auto& t) { return t && (*t)(x) > 0.0; });
    if (!covered) throw Error(ErrorKind::Validation, n + " coverage gap at " + csv::format_number(x));
  }
  for (std::size_t k = 0; k < 3; ++k)
    if (!v.sets[k]) throw Error(ErrorKind::Validation, n + ": missing " + std::string(to_string(Level(k))) + " set");
  if (!(v.sets[0]->peak < v.sets[1]->peak && v.sets[1]->peak < v.sets[2]->peak))
    throw Error(ErrorKind::Validation, n + ": peaks must be ordered low < medium < high");
}

json triangle_json(const Triangle& t) { return json::array({t.left, t.peak, t.right}); }

json variable_json(const FuzzyVariable& v) {
  json sets = json::object();
  for (std::size_t k = 0; k < 3; ++k)
    if (v.sets[k]) sets[std::string(to_string(Level(k)))] = triangle_json(*v.sets[k]);
  return {{"name", v.name}, {"range", json::array({v.lo, v.hi})}, {"sets", sets}};
}

FuzzyVariable variable_from(const json& j) {
  FuzzyVariable v;
  v.name = j.at("name").get<std::string>();
  v.lo = j.at("range").at(0).get<double>();
  v.hi = j.at("range").at(1).get<double>();
  for (const auto& [key, val] : j.at("sets").items()) {
    if (!val.is_array() || val.size() != 3)
      throw Error(ErrorKind::Parse, v.name + "." + key + ": expected [left, peak, right]");
    v.sets[std::size_t(level_from(key))] = Triangle{val[0].get<double>(), val[1].get<double>(), val[2].get<double>()};
  }
  return v;
}

json term_json(const Rule::Term& t) { return {{"variable", t.variable}, {"level", to_string(t.level)}}; }

Rule::Term term_from(const json& j) {
  return {j.at("variable").get<std::string>(), level_from(j.at("level").get<std::string>())};
}

}  // namespace

nlohmann::json NormalizedInputs::to_json() const {
  json r = json::object();
  for (std::size_t i = 0; i < kPiInputs.size(); ++i)
    r[std::string(kPiInputs[i])] = ratio[i] ? json(*ratio[i]) : json(nullptr);
  return {{"start", start}, {"stop", stop}, {"ratio", r}};
}

NormalizedInputs NormalizedInputs::from_json(const nlohmann::json& j) {
  NormalizedInputs n;
  n.start = j.at("start").get<double>();
  n.stop = j.at("stop").get<double>();
  for (std::size_t i = 0; i < kPiInputs.size(); ++i) {
    const auto& v = j.at("ratio").at(std::string(kPiInputs[i]));
    if (!v.is_null()) n.ratio[i] = v.get<double>();
  }
  return n;
}

std::vector<NormalizedInputs> normalize(std::span<const FeatureWindow> walk, std::span<const FeatureWindow> sit,
                                        std::size_t last_n) {
  if (walk.size() < last_n || sit.empty() || last_n == 0)
    throw Error(ErrorKind::InsufficientData, "normalization needs " + std::to_string(last_n) +
                                                 " WALK windows and at least one SIT window");
  std::array<std::optional<double>, 6> baseline;
  for (std::size_t i = 0; i < kPiInputs.size(); ++i) {
    double sum = 0.0;
    int count = 0;
    for (const auto& w : sit)
      if (const auto v = feature(w, i)) {
        sum += *v;
        ++count;
      }
    if (count > 0 && sum / count > 0.0) baseline[i] = sum / count;
  }

  std::vector<FeatureWindow> ordered(walk.begin(), walk.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  std::vector<NormalizedInputs> out;
  for (std::size_t k = ordered.size() - last_n; k < ordered.size(); ++k) {
    NormalizedInputs n;
    n.start = ordered[k].start;
    n.stop = ordered[k].stop;
    for (std::size_t i = 0; i < kPiInputs.size(); ++i) {
      const auto v = feature(ordered[k], i);
      if (!v || !baseline[i]) continue;
      const double r = *v / *baseline[i];
      if (std::isfinite(r) && r >= 0.0) n.ratio[i] = r;
    }
    out.push_back(n);
  }
  return out;
}

std::string_view to_string(Level l) {
  switch (l) {
    case Level::Low: return "low";
    case Level::Medium: return "medium";
    case Level::High: return "high";
  }
  return "medium";
}

Level level_from(std::string_view s) {
  if (s == "low") return Level::Low;
  if (s == "medium") return Level::Medium;
  if (s == "high") return Level::High;
  throw Error(ErrorKind::Parse, "unknown fuzzy level '" + std::string(s) + "'");
}

double Triangle::operator()(double x) const {
  if (x < left || x > right) return 0.0;
  if (x == peak) return 1.0;
  if (x < peak) return (x - left) / (peak - left);
  return (right - x) / (right - peak);
}

FuzzyModel FuzzyModel::default_model() {
  FuzzyModel m;
  for (auto name : kPiInputs)
    m.inputs.push_back({std::string(name), 0.0, 3.0, {Triangle{0.0, 0.0, 1.0}, Triangle{0.5, 1.0, 1.5}, Triangle{1.0, 3.0, 3.0}}});
  for (auto name : kPiOutputs)
    m.outputs.push_back(
        {std::string(name), 0.0, 1.0, {Triangle{0.0, 0.0, 0.5}, Triangle{0.25, 0.5, 0.75}, Triangle{0.5, 1.0, 1.0}}});

  using L = Level;
  auto rule = [&](std::vector<Rule::Term> when, const char* out, L level) { m.rules.push_back({std::move(when), {out, level}}); };
  // Stress rises with HR and SCR and falls with RMSSD.
  rule({{"HR", L::High}}, "stress", L::High);
  rule({{"HR", L::Low}}, "stress", L::Low);
  rule({{"RMSSD", L::Low}}, "stress", L::High);
  rule({{"RMSSD", L::High}}, "stress", L::Low);
  rule({{"SCR", L::High}}, "stress", L::High);
  rule({{"SCR", L::Low}}, "stress", L::Low);
  rule({{"HR", L::High}, {"RMSSD", L::Low}}, "stress", L::High);
  rule({{"HR", L::Medium}, {"RMSSD", L::Medium}, {"SCR", L::Medium}}, "stress", L::Medium);
  // Energy follows cardiac and respiratory load.
  rule({{"HR", L::High}}, "energy", L::High);
  rule({{"HR", L::Low}}, "energy", L::Low);
  rule({{"RR", L::High}}, "energy", L::High);
  rule({{"RR", L::Low}}, "energy", L::Low);
  rule({{"HR", L::High}, {"RR", L::High}}, "energy", L::High);
  rule({{"HR", L::Medium}, {"RR", L::Medium}}, "energy", L::Medium);
  // Attention follows tonic and phasic arousal.
  rule({{"SCL", L::High}}, "attention", L::High);
  rule({{"SCL", L::Low}}, "attention", L::Low);
  rule({{"SCR", L::High}}, "attention", L::High);
  rule({{"SCR", L::Low}}, "attention", L::Low);
  rule({{"SCL", L::Medium}, {"SCR", L::Medium}}, "attention", L::Medium);
  // Fatigue: sustained HR rise with LF withdrawal.
  rule({{"HR", L::High}, {"LF", L::Low}}, "fatigue", L::High);
  rule({{"HR", L::High}}, "fatigue", L::High);
  rule({{"HR", L::Low}}, "fatigue", L::Low);
  rule({{"LF", L::Low}}, "fatigue", L::High);
  rule({{"LF", L::High}}, "fatigue", L::Low);
  rule({{"HR", L::Medium}, {"LF", L::Medium}}, "fatigue", L::Medium);
  return m;
}

void FuzzyModel::validate() const {
  std::set<std::string> seen;
  for (const auto& v : inputs) {
    if (index_of(kPiInputs, v.name) < 0) throw Error(ErrorKind::Validation, "unknown input variable '" + v.name + "'");
    if (!seen.insert(v.name).second) throw Error(ErrorKind::Validation, "duplicate variable '" + v.name + "'");
    check_variable(v);
  }
  for (const auto& v : outputs) {
    if (index_of(kPiOutputs, v.name) < 0) throw Error(ErrorKind::Validation, "unknown output variable '" + v.name + "'");
    if (!seen.insert(v.name).second) throw Error(ErrorKind::Validation, "duplicate variable '" + v.name + "'");
    check_variable(v);
  }
  for (auto name : kPiOutputs)
    if (!find(outputs, name)) throw Error(ErrorKind::Validation, "output '" + std::string(name) + "' is not declared");
  for (std::size_t r = 0; r < rules.size(); ++r) {
    const std::string where = "rule " + std::to_string(r + 1) + ": ";
    if (rules[r].when.empty()) throw Error(ErrorKind::Validation, where + "needs at least one condition");
    for (const auto& t : rules[r].when)
      if (!find(inputs, t.variable)) throw Error(ErrorKind::Validation, where + "undeclared input '" + t.variable + "'");
    if (!find(outputs, rules[r].then.variable))
      throw Error(ErrorKind::Validation, where + "undeclared output '" + rules[r].then.variable + "'");
  }
}

nlohmann::json FuzzyModel::to_json() const {
  json in = json::array(), out = json::array(), rs = json::array();
  for (const auto& v : inputs) in.push_back(variable_json(v));
  for (const auto& v : outputs) out.push_back(variable_json(v));
  for (const auto& r : rules) {
    json when = json::array();
    for (const auto& t : r.when) when.push_back(term_json(t));
    rs.push_back({{"if", when}, {"then", term_json(r.then)}});
  }
  return {{"schema_version", kSchemaVersion}, {"inputs", in}, {"outputs", out}, {"rules", rs}};
}

FuzzyModel FuzzyModel::from_json(const nlohmann::json& j) {
  FuzzyModel m;
  try {
    if (j.value("schema_version", 0) != kSchemaVersion) throw Error(ErrorKind::Parse, "unsupported fuzzy model schema_version");
    for (const auto& v : j.at("inputs")) m.inputs.push_back(variable_from(v));
    for (const auto& v : j.at("outputs")) m.outputs.push_back(variable_from(v));
    for (const auto& r : j.at("rules")) {
      Rule rule;
      for (const auto& t : r.at("if")) rule.when.push_back(term_from(t));
      rule.then = term_from(r.at("then"));
      m.rules.push_back(std::move(rule));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("fuzzy model: ") + e.what());
  }
  m.validate();
  return m;
}

FuzzyModel FuzzyModel::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(csv::read_text(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

nlohmann::json PIScores::to_json() const {
  json j = json::object();
  for (std::size_t k = 0; k < kPiOutputs.size(); ++k)
    j[std::string(kPiOutputs[k])] = {{"value", value[k]}, {"degraded", bool(degraded[k])}};
  return j;
}

PIScores PIScores::from_json(const nlohmann::json& j) {
  PIScores s;
  for (std::size_t k = 0; k < kPiOutputs.size(); ++k) {
    const auto& e = j.at(std::string(kPiOutputs[k]));
    s.value[k] = e.at("value").get<double>();
    s.degraded[k] = e.at("degraded").get<bool>();
  }
  return s;
}

PIScores infer(const FuzzyModel& model, const NormalizedInputs& inputs) {
  PIScores out;
  for (std::size_t k = 0; k < kPiOutputs.size(); ++k) {
    const FuzzyVariable* ov = find(model.outputs, kPiOutputs[k]);
    if (!ov) throw Error(ErrorKind::Configuration, "fuzzy model lacks output '" + std::string(kPiOutputs[k]) + "'");

    std::array<double, 3> clip{};  // max firing strength per output level
    bool any = false, missing = false;
    for (const auto& r : model.rules) {
      if (r.then.variable != ov->name) continue;
      double strength = 1.0;
      for (const auto& t : r.when) {
        const FuzzyVariable* iv = find(model.inputs, t.variable);
        const int slot = index_of(kPiInputs, t.variable);
        if (!iv || slot < 0) throw Error(ErrorKind::Configuration, "rule uses undeclared input '" + t.variable + "'");
        const auto& x = inputs.ratio[std::size_t(slot)];
        if (!x) {
          missing = true;
          strength = 0.0;
          break;
        }
        strength = std::min(strength, membership(*iv, t.level, std::clamp(*x, iv->lo, iv->hi)));
      }
      auto& c = clip[std::size_t(r.then.level)];
      c = std::max(c, strength);
      any = any || strength > 0.0;
    }

    out.degraded[k] = missing || !any;
    if (!any) {
      out.value[k] = 0.5 * (ov->lo + ov->hi);
      continue;
    }
    double num = 0.0, den = 0.0;
    const double step = (ov->hi - ov->lo) / (FuzzyModel::kGrid - 1);
    for (int i = 0; i < FuzzyModel::kGrid; ++i) {
      const double y = ov->lo + i * step;
      double mu = 0.0;
      for (std::size_t l = 0; l < 3; ++l)
        if (clip[l] > 0.0) mu = std::max(mu, std::min(clip[l], membership(*ov, Level(l), y)));
      const double w = (i == 0 || i == FuzzyModel::kGrid - 1) ? 0.5 : 1.0;
      num += w * mu * y;
      den += w * mu;
    }
    out.value[k] = den > 0.0 ? num / den : 0.5 * (ov->lo + ov->hi);
  }
  return out;
}

}  // namespace exobench
