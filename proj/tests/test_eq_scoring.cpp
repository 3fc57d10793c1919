#include <doctest.h>

#include <cmath>
#include <random>

#include "exobench/csv.hpp"
#include "exobench/eq_scoring.hpp"
#include "exobench/error.hpp"

using namespace exobench;

namespace {

std::vector<PairOutcome> round_robin(const std::vector<std::string>& subs, std::mt19937_64* rng) {
  std::vector<PairOutcome> out;
  for (std::size_t a = 0; a < subs.size(); ++a)
    for (std::size_t b = a + 1; b < subs.size(); ++b) {
      PairOutcome o{subs[a], subs[b], subs[a]};
      if (rng) {
        const int pick = int((*rng)() % 3);
        o.winner = pick == 0 ? std::optional<std::string>(subs[a])
                   : pick == 1 ? std::optional<std::string>(subs[b])
                               : std::nullopt;
      }
      out.push_back(o);
    }
  return out;
}

EqResponse constant_response(const EqDefinition& def, int raw) {
  EqResponse r;
  r.subject = "S";
  for (const auto& it : def.items) r.scores[it.id] = raw;
  for (const auto& f : def.factors) r.pairwise[f] = round_robin(def.subfactors_of(f), nullptr);
  return r;
}

EqResponse random_response(const EqDefinition& def, const std::string& subject, std::mt19937_64& rng) {
  EqResponse r;
  r.subject = subject;
  std::uniform_int_distribution<int> likert(1, 7);
  for (const auto& it : def.items) r.scores[it.id] = likert(rng);
  for (const auto& f : def.factors) r.pairwise[f] = round_robin(def.subfactors_of(f), &rng);
  return r;
}

// Raw answer that yields the given reversal-adjusted score.
int raw_for(const EqItem& it, int adjusted) { return it.reversed ? 8 - adjusted : adjusted; }

std::string message_of(const EqDefinition& d) {
  try {
    d.validate();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("reverse map") {
  CHECK(reverse_map(5, true) == 3);
  CHECK(reverse_map(4, true) == 4);
  CHECK(reverse_map(7, false) == 7);
  for (int x = 1; x <= 7; ++x) CHECK(reverse_map(reverse_map(x, true), true) == x);
  CHECK_THROWS_AS(reverse_map(0, true), Error);
  CHECK_THROWS_AS(reverse_map(8, false), Error);
}

TEST_CASE("sub-factor score") {
  CHECK(subfactor_score(std::vector<int>{4, 4, 4, 4}) == 4.0);
  CHECK(subfactor_score(std::vector<int>{1, 7}) == 4.0);
  CHECK(subfactor_score(std::vector<int>{3, 5, 6}) == doctest::Approx(14.0 / 3.0).epsilon(1e-15));
  CHECK(subfactor_score(std::vector<int>{6, 3, 5}) == subfactor_score(std::vector<int>{3, 5, 6}));
}

TEST_CASE("pairwise weights") {
  const std::vector<std::string> two{"A", "B"}, three{"A", "B", "C"}, four{"A", "B", "C", "D"};
  CHECK(factor_weights(two, std::vector<PairOutcome>{{"A", "B", "A"}}) == std::vector<double>{1.0, 0.0});
  CHECK(factor_weights(three, std::vector<PairOutcome>{{"A", "B", "A"}, {"B", "C", "B"}, {"C", "A", "C"}}) ==
        std::vector<double>{1.0, 1.0, 1.0});
  const auto w4 = factor_weights(four, round_robin(four, nullptr));
  CHECK(w4 == std::vector<double>{3.0, 2.0, 1.0, 0.0});
  CHECK(w4[0] + w4[1] + w4[2] + w4[3] == 6.0);
  CHECK(factor_weights(two, std::vector<PairOutcome>{{"B", "A", std::nullopt}}) == std::vector<double>{0.5, 0.5});

  try {
    factor_weights(three, std::vector<PairOutcome>{{"A", "B", "A"}, {"B", "C", "B"}});
    FAIL("expected incomplete comparison");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IncompleteResponse);
    CHECK(std::string(e.what()).find("A vs C") != std::string::npos);
  }
  CHECK_THROWS_AS(factor_weights(two, std::vector<PairOutcome>{{"A", "B", "C"}}), Error);
  CHECK_THROWS_AS(factor_weights(two, std::vector<PairOutcome>{{"A", "B", "A"}, {"B", "A", "B"}}), Error);
}

TEST_CASE("factor score") {
  CHECK(factor_score(std::vector<double>{6.0, 2.0}, std::vector<double>{1.0, 0.0}) == 6.0);
  const std::vector<double> ss{2.0, 3.5, 6.0, 4.25};
  CHECK(factor_score(ss, std::vector<double>(4, 1.5)) == doctest::Approx((2.0 + 3.5 + 6.0 + 4.25) / 4.0));
  CHECK(factor_score(std::vector<double>(4, 5.5), std::vector<double>{3, 2, 1, 0}) == doctest::Approx(5.5));
  CHECK_THROWS_AS(factor_score(ss, std::vector<double>{1.0}), Error);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(1.0, 7.0);
  const std::vector<std::string> subs{"A", "B", "C", "D", "E"};
  for (int i = 0; i < 200; ++i) {
    std::vector<double> s(5);
    for (auto& v : s) v = u(rng);
    const auto w = factor_weights(subs, round_robin(subs, &rng));
    const double fs = factor_score(s, w);
    CHECK(fs >= *std::min_element(s.begin(), s.end()) - 1e-12);
    CHECK(fs <= *std::max_element(s.begin(), s.end()) + 1e-12);
    // Relabelling sub-factors together with their weights.
    std::vector<double> rs(s.rbegin(), s.rend()), rw(w.rbegin(), w.rend());
    CHECK(factor_score(rs, rw) == doctest::Approx(fs).epsilon(1e-14));
  }
}

TEST_CASE("definition") {
  auto def = EqDefinition::synthetic_default();
  CHECK_NOTHROW(def.validate());
  CHECK(def.items.size() == 132);
  CHECK(std::count_if(def.items.begin(), def.items.end(), [](const auto& i) { return i.control; }) == 16);
  CHECK(def.subfactors_of("usability").size() == 4);
  CHECK(EqDefinition::from_json(def.to_json()).to_json() == def.to_json());

  SUBCASE("131 items") {
    def.items.pop_back();
    CHECK(message_of(def).find("expected 132") != std::string::npos);
  }
  SUBCASE("15 sub-factors") {
    def.subfactors.pop_back();
    CHECK(message_of(def).find("expected 16 sub-factors") != std::string::npos);
  }
  SUBCASE("3 factors") {
    def.factors.pop_back();
    CHECK(message_of(def).find("expected 4 factors") != std::string::npos);
  }
  SUBCASE("15 control pairs") {
    def.controls.pop_back();
    CHECK(message_of(def).find("expected 16 control pairs") != std::string::npos);
  }
  SUBCASE("dangling control pair") {
    def.controls[3].original = "Q999";
    CHECK(message_of(def).find("unknown item") != std::string::npos);
  }
  SUBCASE("load reports the file") {
    def.items.pop_back();
    const auto path = std::filesystem::temp_directory_path() / "exobench_eq_131.json";
    csv::write_text(path, def.to_json().dump());
    try {
      EqDefinition::load(path);
      FAIL("expected validation error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Validation);
      CHECK(std::string(e.what()).find("expected 132") != std::string::npos);
    }
    std::filesystem::remove(path);
  }
}

TEST_CASE("consistency") {
  const auto def = EqDefinition::synthetic_default();
  auto r = constant_response(def, 4);
  CHECK(consistency(r, def) == 100.0);

  const auto& orig = def.item(def.controls[0].original);
  const auto& ctrl = def.item(def.controls[0].control);
  r.scores[orig.id] = raw_for(orig, 7);
  r.scores[ctrl.id] = raw_for(ctrl, 1);
  CHECK(consistency(r, def) == 93.75);

  r.scores[ctrl.id] = raw_for(ctrl, 5);
  CHECK(consistency(r, def) == doctest::Approx(98.75).epsilon(1e-14));

  r.scores[ctrl.id] = raw_for(ctrl, 6);
  CHECK(consistency(r, def) == 100.0);

  // A reversed control item answered in the same raw direction is inconsistent.
  const auto& rctl = def.item(def.controls[1].control);
  const auto& rorig = def.item(def.controls[1].original);
  REQUIRE(rctl.reversed != rorig.reversed);
  auto s = constant_response(def, 4);
  s.scores[rorig.id] = 7;
  s.scores[rctl.id] = 7;
  CHECK(consistency(s, def) < 100.0);

  s.scores.erase(rctl.id);
  CHECK_THROWS_AS(consistency(s, def), Error);
}

TEST_CASE("session scoring") {
  const auto def = EqDefinition::synthetic_default();
  const auto all4 = score_session(constant_response(def, 4), def);
  for (const auto& [f, v] : all4.fs) CHECK(v == 4.0);
  CHECK(all4.consistency == 100.0);
  CHECK(all4.ss.size() == 16);
  CHECK(FactorReport::from_json(all4.to_json()).to_json() == all4.to_json());

  auto missing = constant_response(def, 4);
  missing.scores.erase("Q007");
  missing.scores.erase("Q050");
  try {
    score_session(missing, def);
    FAIL("expected incomplete response");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IncompleteResponse);
    CHECK(std::string(e.what()).find("Q007, Q050") != std::string::npos);
  }
  auto no_pairs = constant_response(def, 4);
  no_pairs.pairwise.erase("perceptibility");
  CHECK_THROWS_AS(score_session(no_pairs, def), Error);

  SUBCASE("control items excluded unless configured") {
    auto r = constant_response(def, 4);
    r.scores[def.controls[0].control] = 1;
    r.scores[def.controls[0].original] = 4;
    const std::string sub = def.item(def.controls[0].original).subfactor;
    CHECK(score_session(r, def).ss.at(sub) == 4.0);
    auto with = def;
    with.include_controls = true;
    CHECK(score_session(r, with).ss.at(sub) < 4.0);
  }
}

TEST_CASE("five-subject batch") {
  const auto def = EqDefinition::synthetic_default();
  std::mt19937_64 rng(21);
  std::vector<EqResponse> responses;
  std::vector<FactorReport> reports;
  for (int s = 1; s <= 5; ++s) {
    responses.push_back(random_response(def, "S0" + std::to_string(s), rng));
    reports.push_back(score_session(responses.back(), def));
  }
  const auto stats = batch_summary(reports);

  // Spreadsheet oracle straight from the raw answers.
  for (const auto& f : def.factors) {
    std::vector<double> fs;
    for (const auto& r : responses) {
      double acc = 0.0;
      const auto subs = def.subfactors_of(f);
      for (const auto& sid : subs) {
        double sum = 0.0, n = 0.0;
        for (const auto& it : def.items)
          if (it.subfactor == sid && !it.control) {
            const int raw = r.scores.at(it.id);
            sum += it.reversed ? 8 - raw : raw;
            n += 1.0;
          }
        double wins = 0.0;
        for (const auto& o : r.pairwise.at(f))
          if (!o.winner && (o.a == sid || o.b == sid))
            wins += 0.5;
          else if (o.winner && *o.winner == sid)
            wins += 1.0;
        acc += wins * sum / n;
      }
      const double ns = double(subs.size());
      fs.push_back(acc * 2.0 / (ns * (ns - 1.0)));
    }
    double mean = 0.0;
    for (double v : fs) mean += v;
    mean /= 5.0;
    double var = 0.0;
    for (double v : fs) var += (v - mean) * (v - mean);
    CHECK(std::abs(stats.at(f).mean - mean) < 1e-12);
    CHECK(std::abs(stats.at(f).sd - std::sqrt(var / 4.0)) < 1e-12);
    CHECK(stats.at(f).n == 5);
  }

  SUBCASE("csv round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "exobench_eq_csv";
    csv::write_text(dir / "scores.csv", responses_to_csv(responses));
    csv::write_text(dir / "pairs.csv", pairwise_to_csv(responses));
    const auto back = read_responses(dir / "scores.csv", dir / "pairs.csv");
    REQUIRE(back.size() == 5);
    CHECK(score_session(back.at("S03"), def).to_json() == reports[2].to_json());

    std::string bad = responses_to_csv(std::span(responses).first(1));
    bad.replace(bad.find(",4\n") != std::string::npos ? bad.find(",4\n") : bad.find(",1\n"), 2, ",9");
    csv::write_text(dir / "bad.csv", bad);
    try {
      read_responses(dir / "bad.csv", std::nullopt);
      FAIL("expected validation error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
    std::filesystem::remove_all(dir);
  }

  const auto table = format_table(reports, def.factors);
  CHECK(table.find("acceptability") != std::string::npos);
  CHECK(table.find("\nsd") != std::string::npos);
}
