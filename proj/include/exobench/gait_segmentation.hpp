#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "exobench/sensor_stream.hpp"

namespace exobench {

/// Load-share phase label: +1 with only the left sole loaded, -1 with only the
/// right one, interpolating through double support. Throws Airborne if both
/// loads are zero and InvalidInput for negative or non-finite loads.
double label_from_soles(double left_load, double right_load);

/// Joint angles (T x 6) with their phase labels.
struct TrainingSet {
  Eigen::MatrixXd Q;
  Eigen::VectorXd p;
  std::vector<StageTag> provenance;

  Eigen::Index size() const { return Q.rows(); }
  /// Throws Validation when sizes disagree, labels leave [-1, 1], or T < 6.
  void validate() const;
};

/// Linear map from joint angles to raw gait phase: phase = Y q. No intercept,
/// so encoder offsets must be zero-referenced.
struct GaitRegressor {
  static constexpr int kSchemaVersion = 1;

  Eigen::Matrix<double, 1, 6> Y = Eigen::Matrix<double, 1, 6>::Zero();
  double rmse = 0.0;
  double ridge = 0.0;
  Eigen::Index samples = 0;

  double phase(const Vector6d& q) const;

  nlohmann::json to_json() const;
  static GaitRegressor from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static GaitRegressor load(const std::filesystem::path& path);
};

/// 1e-6 * trace(Q^T Q) / n.
double default_ridge(const TrainingSet& data);

/// Least-squares fit of Y Q^T ~ p^T, ridge-regularised when `ridge` > 0.
/// `ridge` = nullopt selects default_ridge. With ridge 0 and rank-deficient Q
/// throws Singular.
GaitRegressor train(const TrainingSet& data, std::optional<double> ridge = std::nullopt);

/// Root-mean-square difference between reg.phase(q) and the load-share label
/// over frames with a loaded sole.
double phase_rmse(const GaitRegressor& reg, std::span<const SensorFrame> frames);

/// Builds the training set from a recorded protocol: left-leg swings, right-leg
/// swings and the treadmill sweep. Swing stages get the constant label of the
/// grounded foot and keep only frames whose soles agree with it; treadmill
/// frames are labelled by load share. Airborne frames are dropped. Throws
/// IncompleteTraining naming the first missing stage.
TrainingSet build_training_set(std::span<const SensorFrame> frames);

}  // namespace exobench
