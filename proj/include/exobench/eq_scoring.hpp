#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace exobench {

struct EqItem {
  std::string id;
  std::string subfactor;
  bool reversed = false;
  bool control = false;
};

struct EqSubfactor {
  std::string id;
  std::string factor;
};

struct ControlPair {
  std::string original;
  std::string control;
};

/// Item bank of the EXPERIENCE questionnaire.
struct EqDefinition {
  static constexpr int kSchemaVersion = 1;
  static constexpr std::size_t kItems = 132;
  static constexpr std::size_t kSubfactors = 16;
  static constexpr std::size_t kFactors = 4;
  static constexpr std::size_t kControlPairs = 16;

  std::vector<std::string> factors;
  std::vector<EqSubfactor> subfactors;
  std::vector<EqItem> items;
  std::vector<ControlPair> controls;
  /// Control items stay out of sub-factor means unless this is set.
  bool include_controls = false;
  /// Consistency credit falls linearly to zero as |d| goes from 1 to 1 + decay.
  double consistency_decay = 5.0;

  /// Cardinalities 132/16/4/16 and referential integrity; throws Validation.
  void validate() const;

  const EqItem& item(const std::string& id) const;
  std::vector<std::string> subfactors_of(const std::string& factor) const;

  /// Same cardinalities with placeholder ids: four sub-factors per factor,
  /// 116 scored items (8 in the first sub-factor of each factor, 7 in the
  /// rest), and 16 control items each shadowing one scored item.
  static EqDefinition synthetic_default();

  nlohmann::json to_json() const;
  static EqDefinition from_json(const nlohmann::json& j);
  static EqDefinition load(const std::filesystem::path& path);
};

/// 8 - raw for reversed items. Raw scores outside 1..7 throw Validation.
int reverse_map(int raw, bool reversed);

/// Mean of reversal-adjusted item scores.
double subfactor_score(std::span<const int> adjusted);

/// One sub-factor comparison; an empty winner is a tie.
struct PairOutcome {
  std::string a, b;
  std::optional<std::string> winner;
};

/// Win counts per sub-factor (ties give 0.5 to each), in the order of
/// `subfactors`. Every unordered pair must appear exactly once.
std::vector<double> factor_weights(std::span<const std::string> subfactors, std::span<const PairOutcome> outcomes);

/// 2 / (N (N - 1)) * sum_k w_k ss_k.
double factor_score(std::span<const double> ss, std::span<const double> w);

struct EqResponse {
  std::string subject;
  std::map<std::string, int> scores;                           // item id -> raw 1..7
  std::map<std::string, std::vector<PairOutcome>> pairwise;  // factor -> outcomes
};

/// 100 * mean credit over the control pairs.
double consistency(const EqResponse& response, const EqDefinition& def);

struct FactorReport {
  std::string subject;
  std::map<std::string, double> ss;       // by sub-factor
  std::map<std::string, double> weights;  // by sub-factor
  std::map<std::string, double> fs;       // by factor
  double consistency = 100.0;

  nlohmann::json to_json() const;
  static FactorReport from_json(const nlohmann::json& j);
};

/// Reverse, average per sub-factor, weight per factor, consistency. Missing
/// items or comparisons throw IncompleteResponse listing them.
FactorReport score_session(const EqResponse& response, const EqDefinition& def);

struct FactorStats {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single subject
  std::size_t n = 0;
};

/// Per-factor mean and standard deviation across subjects.
std::map<std::string, FactorStats> batch_summary(std::span<const FactorReport> reports);
nlohmann::json to_json(const std::map<std::string, FactorStats>& stats);
std::map<std::string, FactorStats> stats_from_json(const nlohmann::json& j);

/// Responses CSV: subject,item,score. Pairwise CSV: subject,factor,a,b,winner
/// with winner = a, b or "tie". Returns responses keyed by subject.
std::map<std::string, EqResponse> read_responses(const std::filesystem::path& scores,
                                                 const std::optional<std::filesystem::path>& pairwise);
std::string responses_to_csv(std::span<const EqResponse> responses);
std::string pairwise_to_csv(std::span<const EqResponse> responses);

/// Fixed-width table: one row per subject, then mean and sd rows.
std::string format_table(std::span<const FactorReport> reports, const std::vector<std::string>& factors);

}  // namespace exobench
