#include "exobench/eq_scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "exobench/csv.hpp"
#include "exobench/error.hpp"

namespace exobench {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id;
  return out;
}

std::string expected(std::size_t want, std::size_t got, const char* what) {
  return "expected " + std::to_string(want) + " " + what + ", found " + std::to_string(got);
}

}  // namespace

void EqDefinition::validate() const {
  if (factors.size() != kFactors) throw Error(ErrorKind::Validation, expected(kFactors, factors.size(), "factors"));
  if (subfactors.size() != kSubfactors)
    throw Error(ErrorKind::Validation, expected(kSubfactors, subfactors.size(), "sub-factors"));
  if (items.size() != kItems) throw Error(ErrorKind::Validation, expected(kItems, items.size(), "items"));
  if (controls.size() != kControlPairs)
    throw Error(ErrorKind::Validation, expected(kControlPairs, controls.size(), "control pairs"));
  if (!(consistency_decay > 0.0)) throw Error(ErrorKind::Validation, "consistency_decay must be positive");

  const std::set<std::string> fset(factors.begin(), factors.end());
  if (fset.size() != factors.size()) throw Error(ErrorKind::Validation, "duplicate factor names");
  std::set<std::string> sset;
  for (const auto& s : subfactors) {
    if (!sset.insert(s.id).second) throw Error(ErrorKind::Validation, "duplicate sub-factor '" + s.id + "'");
    if (!fset.count(s.factor))
      throw Error(ErrorKind::Validation, "sub-factor '" + s.id + "' names unknown factor '" + s.factor + "'");
  }
  for (const auto& f : factors)
    if (subfactors_of(f).empty()) throw Error(ErrorKind::Validation, "factor '" + f + "' has no sub-factors");

  std::set<std::string> iset;
  std::map<std::string, int> scored;
  for (const auto& it : items) {
    if (!iset.insert(it.id).second) throw Error(ErrorKind::Validation, "duplicate item '" + it.id + "'");
    if (!sset.count(it.subfactor))
      throw Error(ErrorKind::Validation, "item '" + it.id + "' names unknown sub-factor '" + it.subfactor + "'");
    if (!it.control) ++scored[it.subfactor];
  }
  for (const auto& s : subfactors)
    if (!scored[s.id]) throw Error(ErrorKind::Validation, "sub-factor '" + s.id + "' has no scored items");

  std::set<std::string> used;
  for (const auto& c : controls) {
    if (!iset.count(c.original) || !iset.count(c.control))
      throw Error(ErrorKind::Validation, "control pair " + c.original + "/" + c.control + " references an unknown item");
    if (item(c.original).control || !item(c.control).control)
      throw Error(ErrorKind::Validation, "control pair " + c.original + "/" + c.control +
                                             " must pair a scored item with a control item");
    if (!used.insert(c.control).second) throw Error(ErrorKind::Validation, "control item '" + c.control + "' reused");
  }
}

const EqItem& EqDefinition::item(const std::string& id) const {
  for (const auto& it : items)
    if (it.id == id) return it;
  throw Error(ErrorKind::Validation, "unknown item '" + id + "'");
}

std::vector<std::string> EqDefinition::subfactors_of(const std::string& factor) const {
  std::vector<std::string> out;
  for (const auto& s : subfactors)
    if (s.factor == factor) out.push_back(s.id);
  return out;
}

EqDefinition EqDefinition::synthetic_default() {
  EqDefinition d;
  d.factors = {"usability", "acceptability", "perceptibility", "functionality"};
  const char prefix[] = {'U', 'A', 'P', 'F'};
  auto item_id = [](std::size_t n) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "Q%03zu", n);
    return std::string(buf);
  };
  std::size_t next = 1;
  std::vector<std::string> firsts;
  for (std::size_t f = 0; f < kFactors; ++f)
    for (int s = 1; s <= 4; ++s) {
      const std::string sid = std::string(1, prefix[f]) + std::to_string(s);
      d.subfactors.push_back({sid, d.factors[f]});
      const int count = s == 1 ? 8 : 7;
      firsts.push_back(item_id(next));
      for (int k = 0; k < count; ++k, ++next) d.items.push_back({item_id(next), sid, next % 4 == 0, false});
    }
  for (std::size_t c = 0; c < kControlPairs; ++c, ++next) {
    const EqItem original = d.item(firsts[c]);
    const std::string id = item_id(next);
    // Alternate controls between same-direction and reversed wording.
    d.items.push_back({id, original.subfactor, c % 2 ? !original.reversed : original.reversed, true});
    d.controls.push_back({original.id, id});
  }
  return d;
}

json EqDefinition::to_json() const {
  json subs = json::array(), its = json::array(), ctl = json::array();
  for (const auto& s : subfactors) subs.push_back({{"id", s.id}, {"factor", s.factor}});
  for (const auto& i : items)
    its.push_back({{"id", i.id}, {"subfactor", i.subfactor}, {"reversed", i.reversed}, {"control", i.control}});
  for (const auto& c : controls) ctl.push_back({{"original", c.original}, {"control", c.control}});
  return {{"schema_version", kSchemaVersion},
          {"factors", factors},
          {"subfactors", subs},
          {"items", its},
          {"controls", ctl},
          {"include_controls", include_controls},
          {"consistency_decay", consistency_decay}};
}

EqDefinition EqDefinition::from_json(const json& j) {
  EqDefinition d;
  try {
    if (j.value("schema_version", 0) != kSchemaVersion)
      throw Error(ErrorKind::Parse, "unsupported questionnaire definition schema_version");
    d.factors = j.at("factors").get<std::vector<std::string>>();
    for (const auto& s : j.at("subfactors")) d.subfactors.push_back({s.at("id"), s.at("factor")});
    for (const auto& i : j.at("items"))
      d.items.push_back({i.at("id"), i.at("subfactor"), i.value("reversed", false), i.value("control", false)});
    for (const auto& c : j.at("controls")) d.controls.push_back({c.at("original"), c.at("control")});
    d.include_controls = j.value("include_controls", false);
    d.consistency_decay = j.value("consistency_decay", 5.0);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("questionnaire definition: ") + e.what());
  }
  d.validate();
  return d;
}

EqDefinition EqDefinition::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(csv::read_text(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

int reverse_map(int raw, bool reversed) {
  if (raw < 1 || raw > 7) throw Error(ErrorKind::Validation, "Likert score " + std::to_string(raw) + " outside 1..7");
  return reversed ? 8 - raw : raw;
}

double subfactor_score(std::span<const int> adjusted) {
  if (adjusted.empty()) throw Error(ErrorKind::InvalidInput, "sub-factor has no items");
  double sum = 0.0;
  for (int v : adjusted) sum += v;
  return sum / double(adjusted.size());
}

std::vector<double> factor_weights(std::span<const std::string> subfactors, std::span<const PairOutcome> outcomes) {
  const std::size_t n = subfactors.size();
  auto index = [&](const std::string& id) -> std::size_t {
    const auto it = std::find(subfactors.begin(), subfactors.end(), id);
    if (it == subfactors.end()) throw Error(ErrorKind::Validation, "comparison names unknown sub-factor '" + id + "'");
    return std::size_t(it - subfactors.begin());
  };
  std::vector<double> w(n, 0.0);
  std::vector<std::vector<bool>> seen(n, std::vector<bool>(n, false));
  for (const auto& o : outcomes) {
    const std::size_t a = index(o.a), b = index(o.b);
    if (a == b) throw Error(ErrorKind::Validation, "sub-factor '" + o.a + "' compared with itself");
    if (seen[a][b]) throw Error(ErrorKind::Validation, "duplicate comparison " + o.a + " vs " + o.b);
    seen[a][b] = seen[b][a] = true;
    if (!o.winner) {
      w[a] += 0.5;
      w[b] += 0.5;
    } else if (*o.winner == o.a) {
      w[a] += 1.0;
    } else if (*o.winner == o.b) {
      w[b] += 1.0;
    } else {
      throw Error(ErrorKind::Validation, "winner '" + *o.winner + "' is not part of " + o.a + " vs " + o.b);
    }
  }
  std::vector<std::string> missing;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (!seen[a][b]) missing.push_back(subfactors[a] + " vs " + subfactors[b]);
  if (!missing.empty()) throw Error(ErrorKind::IncompleteResponse, "missing comparisons: " + join(missing));
  return w;
}

double factor_score(std::span<const double> ss, std::span<const double> w) {
  if (ss.size() != w.size() || ss.empty())
    throw Error(ErrorKind::Validation, "factor score needs one weight per sub-factor score");
  const double n = double(ss.size());
  if (ss.size() == 1) return ss[0];
  double sum = 0.0;
  for (std::size_t k = 0; k < ss.size(); ++k) sum += w[k] * ss[k];
  return 2.0 / (n * (n - 1.0)) * sum;
}

namespace {

int adjusted(const EqResponse& r, const EqItem& it, std::vector<std::string>& missing) {
  const auto found = r.scores.find(it.id);
  if (found == r.scores.end()) {
    missing.push_back(it.id);
    return 0;
  }
  return reverse_map(found->second, it.reversed);
}

}  // namespace

double consistency(const EqResponse& response, const EqDefinition& def) {
  std::vector<std::string> missing;
  double credit = 0.0;
  for (const auto& c : def.controls) {
    const int a = adjusted(response, def.item(c.original), missing);
    const int b = adjusted(response, def.item(c.control), missing);
    const double d = std::abs(double(a - b));
    credit += d <= 1.0 ? 1.0 : std::clamp(1.0 - (d - 1.0) / def.consistency_decay, 0.0, 1.0);
  }
  if (!missing.empty())
    throw Error(ErrorKind::IncompleteResponse, response.subject + ": missing control items: " + join(missing));
  return def.controls.empty() ? 100.0 : 100.0 * credit / double(def.controls.size());
}

FactorReport score_session(const EqResponse& response, const EqDefinition& def) {
  for (const auto& [id, raw] : response.scores) {
    def.item(id);
    reverse_map(raw, false);
  }
  std::vector<std::string> missing;
  std::map<std::string, std::vector<int>> by_sub;
  for (const auto& it : def.items) {
    const int v = adjusted(response, it, missing);
    if (!it.control || def.include_controls) by_sub[it.subfactor].push_back(v);
  }
  if (!missing.empty())
    throw Error(ErrorKind::IncompleteResponse, response.subject + ": missing items: " + join(missing));

  FactorReport rep;
  rep.subject = response.subject;
  for (const auto& [sid, values] : by_sub) rep.ss[sid] = subfactor_score(values);
  for (const auto& f : def.factors) {
    const auto subs = def.subfactors_of(f);
    const auto found = response.pairwise.find(f);
    static const std::vector<PairOutcome> none;
    std::vector<double> w;
    try {
      w = factor_weights(subs, found == response.pairwise.end() ? none : found->second);
    } catch (const Error& e) {
      throw Error(e.kind(), response.subject + ": " + f + ": " + e.what());
    }
    std::vector<double> ss;
    for (std::size_t k = 0; k < subs.size(); ++k) {
      rep.weights[subs[k]] = w[k];
      ss.push_back(rep.ss.at(subs[k]));
    }
    rep.fs[f] = factor_score(ss, w);
  }
  rep.consistency = consistency(response, def);
  return rep;
}

json FactorReport::to_json() const {
  return {{"subject", subject}, {"subfactors", ss}, {"weights", weights}, {"factors", fs}, {"consistency", consistency}};
}

FactorReport FactorReport::from_json(const json& j) {
  FactorReport r;
  r.subject = j.at("subject").get<std::string>();
  r.ss = j.at("subfactors").get<std::map<std::string, double>>();
  r.weights = j.at("weights").get<std::map<std::string, double>>();
  r.fs = j.at("factors").get<std::map<std::string, double>>();
  r.consistency = j.at("consistency").get<double>();
  return r;
}

std::map<std::string, FactorStats> batch_summary(std::span<const FactorReport> reports) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& r : reports)
    for (const auto& [f, v] : r.fs) values[f].push_back(v);
  std::map<std::string, FactorStats> out;
  for (const auto& [f, v] : values) {
    FactorStats s;
    s.n = v.size();
    for (double x : v) s.mean += x;
    s.mean /= double(s.n);
    if (s.n > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - s.mean) * (x - s.mean);
      s.sd = std::sqrt(ss / double(s.n - 1));
    }
    out[f] = s;
  }
  return out;
}

json to_json(const std::map<std::string, FactorStats>& stats) {
  json j = json::object();
  for (const auto& [f, s] : stats) j[f] = {{"mean", s.mean}, {"sd", s.sd}, {"n", s.n}};
  return j;
}

std::map<std::string, FactorStats> stats_from_json(const json& j) {
  std::map<std::string, FactorStats> out;
  for (const auto& [f, s] : j.items()) out[f] = {s.at("mean").get<double>(), s.at("sd").get<double>(), s.at("n").get<std::size_t>()};
  return out;
}

std::map<std::string, EqResponse> read_responses(const std::filesystem::path& scores,
                                                 const std::optional<std::filesystem::path>& pairwise) {
  std::map<std::string, EqResponse> out;
  const csv::Table t = csv::read(scores);
  const std::size_t cs = t.column("subject"), ci = t.column("item"), cv = t.column("score");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string where = scores.string() + ": line " + std::to_string(t.source_line[r]);
    long v = 0;
    try {
      v = t.integer(r, cv);
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, scores.string() + ": " + e.what());
    }
    if (v < 1 || v > 7) throw Error(ErrorKind::Validation, where + ": score " + std::to_string(v) + " outside 1..7");
    auto& resp = out[t.rows[r][cs]];
    resp.subject = t.rows[r][cs];
    if (!resp.scores.emplace(t.rows[r][ci], int(v)).second)
      throw Error(ErrorKind::Validation, where + ": item '" + t.rows[r][ci] + "' answered twice");
  }
  if (!pairwise) return out;

  const csv::Table p = csv::read(*pairwise);
  const std::size_t ps = p.column("subject"), pf = p.column("factor"), pa = p.column("a"), pb = p.column("b"),
                    pw = p.column("winner");
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    const auto& row = p.rows[r];
    PairOutcome o{row[pa], row[pb], std::nullopt};
    if (row[pw] != "tie") o.winner = row[pw];
    auto& resp = out[row[ps]];
    resp.subject = row[ps];
    resp.pairwise[row[pf]].push_back(std::move(o));
  }
  return out;
}

std::string responses_to_csv(std::span<const EqResponse> responses) {
  std::string out = "subject,item,score\n";
  for (const auto& r : responses)
    for (const auto& [id, v] : r.scores) out += r.subject + "," + id + "," + std::to_string(v) + "\n";
  return out;
}

std::string pairwise_to_csv(std::span<const EqResponse> responses) {
  std::string out = "subject,factor,a,b,winner\n";
  for (const auto& r : responses)
    for (const auto& [f, outcomes] : r.pairwise)
      for (const auto& o : outcomes) out += r.subject + "," + f + "," + o.a + "," + o.b + "," + o.winner.value_or("tie") + "\n";
  return out;
}

std::string format_table(std::span<const FactorReport> reports, const std::vector<std::string>& factors) {
  std::string out;
  char buf[64];
  auto cell = [&](const std::string& s, int width) {
    std::snprintf(buf, sizeof buf, "%-*s", width, s.c_str());
    out += buf;
  };
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%15.3f", v);
    out += buf;
  };
  cell("subject", 10);
  for (const auto& f : factors) {
    std::snprintf(buf, sizeof buf, "%15s", f.c_str());
    out += buf;
  }
  out += "    consistency\n";
  for (const auto& r : reports) {
    cell(r.subject, 10);
    for (const auto& f : factors) num(r.fs.at(f));
    num(r.consistency);
    out += "\n";
  }
  const auto stats = batch_summary(reports);
  for (const char* row : {"mean", "sd"}) {
    cell(row, 10);
    for (const auto& f : factors) num(row[0] == 'm' ? stats.at(f).mean : stats.at(f).sd);
    out += "\n";
  }
  return out;
}

}  // namespace exobench
