#include <doctest.h>

#include <algorithm>
#include <random>

#include "exobench/csv.hpp"
#include "exobench/error.hpp"
#include "exobench/pi_engine.hpp"

using namespace exobench;

namespace {

NormalizedInputs uniform(double r) {
  NormalizedInputs n;
  n.ratio.fill(r);
  return n;
}

constexpr std::size_t kHR = 0, kRMSSD = 1, kSCR = 3, kSCL = 4;
constexpr std::size_t kStress = 0, kEnergy = 1, kAttention = 2;

FeatureWindow window(Phase p, double start, double hr) {
  FeatureWindow w;
  w.phase = p;
  w.start = start;
  w.stop = start + 60.0;
  w.hr = hr;
  w.rmssd = 40.0;
  w.rr = 18.0;
  w.scr_rate = 2.0;
  w.scl = 4.0;
  w.lf_fraction = 0.5;
  return w;
}

std::string validation_message(const FuzzyModel& m) {
  try {
    m.validate();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("membership triangles") {
  const Triangle t{0.5, 1.0, 1.5};
  CHECK(t(1.0) == 1.0);
  CHECK(t(0.75) == 0.5);
  CHECK(t(1.25) == 0.5);
  CHECK(t(0.5) == 0.0);
  CHECK(t(2.0) == 0.0);
  const Triangle shoulder{0.0, 0.0, 1.0};
  CHECK(shoulder(0.0) == 1.0);
  CHECK(shoulder(0.25) == 0.75);
}

TEST_CASE("default model") {
  const auto m = FuzzyModel::default_model();
  CHECK_NOTHROW(m.validate());

  SUBCASE("all inputs at the medium peak") {
    const auto s = infer(m, uniform(1.0));
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(s.value[k] == doctest::Approx(0.5).epsilon(0.02));
      CHECK_FALSE(s.degraded[k]);
    }
  }

  SUBCASE("only high-stress rules fire") {
    auto in = uniform(1.0);
    in.ratio[kHR] = 3.0;
    in.ratio[kRMSSD] = 0.0;
    in.ratio[kSCR] = 3.0;
    // Centroid of the triangle (0.5, 1, 1) is the mean of its vertices.
    CHECK(infer(m, in).value[kStress] == doctest::Approx((0.5 + 1.0 + 1.0) / 3.0).epsilon(1e-5));
  }

  SUBCASE("codomain and continuity") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    for (int i = 0; i < 2000; ++i) {
      NormalizedInputs in;
      for (auto& r : in.ratio) r = u(rng);
      const auto s = infer(m, in);
      auto nudged = in;
      for (auto& r : nudged.ratio) *r += 1e-6;
      const auto t = infer(m, nudged);
      for (std::size_t k = 0; k < 4; ++k) {
        CHECK_FALSE((s.value[k] < 0.0 || s.value[k] > 1.0));
        CHECK_FALSE(std::abs(s.value[k] - t.value[k]) >= 1e-3);
      }
    }
  }

  SUBCASE("monotone stress trends") {
    double prev_hr = -1.0, prev_rmssd = 2.0;
    for (double x = 0.0; x <= 3.0; x += 0.005) {
      auto a = uniform(1.0);
      a.ratio[kHR] = x;
      const double s_hr = infer(m, a).value[kStress];
      CHECK(s_hr >= prev_hr - 1e-12);
      prev_hr = s_hr;

      auto b = uniform(1.0);
      b.ratio[kRMSSD] = x;
      const double s_rmssd = infer(m, b).value[kStress];
      CHECK(s_rmssd <= prev_rmssd + 1e-12);
      prev_rmssd = s_rmssd;
    }
  }

  SUBCASE("rule order does not matter") {
    auto shuffled = m;
    std::mt19937_64 rng(5);
    std::shuffle(shuffled.rules.begin(), shuffled.rules.end(), rng);
    NormalizedInputs in;
    in.ratio = {1.4, 0.7, 1.6, 1.2, 0.9, 0.8};
    CHECK(infer(m, in).value == infer(shuffled, in).value);
  }

  SUBCASE("missing inputs degrade only the PIs that use them") {
    auto in = uniform(1.2);
    in.ratio[kSCR].reset();
    in.ratio[kSCL].reset();
    const auto s = infer(m, in);
    CHECK(s.degraded[kStress]);
    CHECK(s.degraded[kAttention]);
    CHECK(s.value[kAttention] == 0.5);
    CHECK_FALSE(s.degraded[kEnergy]);
  }

  SUBCASE("json round trip") {
    const auto back = FuzzyModel::from_json(m.to_json());
    CHECK(back.to_json() == m.to_json());
    const auto path = std::filesystem::temp_directory_path() / "exobench_fuzzy_test.json";
    csv::write_text(path, m.to_json().dump(2));
    CHECK(FuzzyModel::load(path).rules.size() == m.rules.size());
    std::filesystem::remove(path);
  }
}

TEST_CASE("model validation") {
  auto m = FuzzyModel::default_model();

  SUBCASE("missing medium set") {
    m.inputs[kHR].sets[1].reset();
    CHECK(validation_message(m).find("HR coverage gap") != std::string::npos);
  }
  SUBCASE("unordered peaks") {
    m.inputs[kRMSSD].sets[1] = Triangle{-0.5, 0.0, 1.5};
    CHECK(validation_message(m).find("RMSSD: peaks") != std::string::npos);
  }
  SUBCASE("undeclared output") {
    m.rules.push_back({{{"HR", Level::High}}, {"mood", Level::High}});
    CHECK(validation_message(m).find("undeclared output 'mood'") != std::string::npos);
  }
  SUBCASE("undeclared input") {
    m.rules.push_back({{{"EMG", Level::High}}, {"stress", Level::High}});
    CHECK(validation_message(m).find("undeclared input 'EMG'") != std::string::npos);
  }
  SUBCASE("no rule fires") {
    m.rules.clear();
    const auto s = infer(m, uniform(1.0));
    CHECK(s.degraded == std::array<bool, 4>{true, true, true, true});
    CHECK(s.value == std::array<double, 4>{0.5, 0.5, 0.5, 0.5});
  }
}

TEST_CASE("normalization") {
  std::vector<FeatureWindow> sit, walk;
  for (int k = 0; k < 4; ++k) sit.push_back(window(Phase::Sit, 60.0 * k, k % 2 ? 78.0 : 82.0));
  for (int k = 0; k < 16; ++k) walk.push_back(window(Phase::Walk, 420.0 + 60.0 * k, 100.0 + k));
  walk.back().hr = 118.0;

  const auto n = normalize(walk, sit);
  REQUIRE(n.size() == 5);
  CHECK(n.front().start == 420.0 + 60.0 * 11);
  CHECK(*n.back().ratio[kHR] == doctest::Approx(118.0 / 80.0));
  CHECK(*n.back().ratio[kHR] == doctest::Approx(1.475));
  for (std::size_t i = 1; i < 6; ++i) CHECK(*n.back().ratio[i] == 1.0);

  const std::vector<FeatureWindow> same(5, window(Phase::Sit, 0.0, 80.0));
  for (const auto& row : normalize(same, same))
    for (const auto& r : row.ratio) CHECK(*r == 1.0);

  auto zero = sit;
  for (auto& w : zero) w.scr_rate = 0.0;
  CHECK_FALSE(normalize(walk, zero).front().ratio[kSCR].has_value());

  CHECK_THROWS_AS(normalize(std::span(walk).first(4), sit), Error);
  CHECK_THROWS_AS(normalize(walk, {}), Error);
  CHECK(NormalizedInputs::from_json(n[2].to_json()).to_json() == n[2].to_json());
}
