#include "exobench/gait_segmentation.hpp"

#include <cmath>
#include <map>

#include "exobench/csv.hpp"

namespace exobench {

using nlohmann::json;

double label_from_soles(double left_load, double right_load) {
  if (!std::isfinite(left_load) || !std::isfinite(right_load) || left_load < 0.0 || right_load < 0.0)
    throw Error(ErrorKind::InvalidInput, "sole loads must be finite and non-negative");
  const double total = left_load + right_load;
  if (total == 0.0) throw Error(ErrorKind::Airborne, "both soles unloaded");
  return (left_load - right_load) / total;
}

void TrainingSet::validate() const {
  if (Q.cols() != 6) throw Error(ErrorKind::Validation, "training matrix must have 6 columns");
  if (Q.rows() != p.size()) throw Error(ErrorKind::Validation, "training matrix and labels differ in length");
  if (!provenance.empty() && Eigen::Index(provenance.size()) != Q.rows())
    throw Error(ErrorKind::Validation, "provenance tags differ in length from the training matrix");
  if (Q.rows() < Q.cols())
    throw Error(ErrorKind::Validation, "training set needs at least 6 samples, got " + std::to_string(Q.rows()));
  if (!Q.allFinite() || !p.allFinite()) throw Error(ErrorKind::Validation, "training set has non-finite entries");
  if ((p.array().abs() > 1.0).any()) throw Error(ErrorKind::Validation, "labels must lie in [-1, 1]");
}

double GaitRegressor::phase(const Vector6d& q) const {
  detail::require_finite(q, "q");
  return Y.dot(q);
}

json GaitRegressor::to_json() const {
  std::vector<double> w(Y.data(), Y.data() + 6);
  return {{"schema_version", kSchemaVersion},
          {"model", "gait_regressor"},
          {"joints", {"RH", "RK", "RA", "LH", "LK", "LA"}},
          {"weights", w},
          {"rmse", rmse},
          {"training", {{"samples", samples}, {"ridge", ridge}}}};
}

GaitRegressor GaitRegressor::from_json(const json& j) {
  if (j.value("schema_version", -1) != kSchemaVersion || j.value("model", "") != "gait_regressor")
    throw Error(ErrorKind::Validation, "not a gait_regressor model (schema_version 1)");
  GaitRegressor reg;
  try {
    const auto w = j.at("weights").get<std::vector<double>>();
    if (w.size() != 6) throw Error(ErrorKind::Validation, "gait regressor needs 6 weights");
    for (int i = 0; i < 6; ++i) reg.Y[i] = w[i];
    reg.rmse = j.value("rmse", 0.0);
    if (j.contains("training")) {
      reg.samples = j.at("training").value("samples", Eigen::Index(0));
      reg.ridge = j.at("training").value("ridge", 0.0);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("gait regressor: ") + e.what());
  }
  if (!reg.Y.allFinite() || !(reg.rmse >= 0.0)) throw Error(ErrorKind::Validation, "gait regressor has invalid values");
  return reg;
}

void GaitRegressor::save(const std::filesystem::path& path) const { csv::write_text(path, to_json().dump(2) + "\n"); }

GaitRegressor GaitRegressor::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(csv::read_text(path)));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

double default_ridge(const TrainingSet& data) {
  return 1e-6 * (data.Q.transpose() * data.Q).trace() / double(data.Q.cols());
}

GaitRegressor train(const TrainingSet& data, std::optional<double> ridge) {
  data.validate();
  const double lambda = ridge ? *ridge : default_ridge(data);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::InvalidInput, "ridge must be >= 0");

  const Eigen::Index n = data.Q.cols();
  Eigen::MatrixXd normal = data.Q.transpose() * data.Q;
  normal.diagonal().array() += lambda;
  const Eigen::VectorXd rhs = data.Q.transpose() * data.p;

  Eigen::VectorXd y;
  Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() == Eigen::Success && llt.rcond() > 1e-10) {
    y = llt.solve(rhs);
  } else if (lambda == 0.0) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(data.Q);
    if (cod.rank() < n)
      throw Error(ErrorKind::Singular,
                  "joint-angle matrix is rank deficient (rank " + std::to_string(cod.rank()) +
                      " < 6); retrain with a positive ridge");
    y = cod.solve(data.p);
  } else {
    // Ill-conditioned: solve the ridge problem as an augmented least-squares system.
    Eigen::MatrixXd aug(data.Q.rows() + n, n);
    aug << data.Q, std::sqrt(lambda) * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd target = Eigen::VectorXd::Zero(aug.rows());
    target.head(data.p.size()) = data.p;
    y = aug.completeOrthogonalDecomposition().solve(target);
  }

  GaitRegressor reg;
  reg.Y = y.transpose();
  reg.ridge = lambda;
  reg.samples = data.Q.rows();
  reg.rmse = (data.Q * y - data.p).norm() / std::sqrt(double(data.Q.rows()));
  return reg;
}

double phase_rmse(const GaitRegressor& reg, std::span<const SensorFrame> frames) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& f : frames) {
    if (f.left_load + f.right_load <= 0.0) continue;
    const double e = reg.phase(f.q) - label_from_soles(f.left_load, f.right_load);
    sum += e * e;
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::InsufficientData, "no loaded frames to evaluate");
  return std::sqrt(sum / double(n));
}

TrainingSet build_training_set(std::span<const SensorFrame> frames) {
  // A swing frame counts only if its soles agree with the grounded foot.
  constexpr double kSwingLabelTolerance = 0.05;

  std::map<StageKind, std::size_t> seen;
  std::vector<std::pair<const SensorFrame*, double>> kept;
  kept.reserve(frames.size());
  for (const auto& f : frames) {
    if (f.stage.kind == StageKind::Walk) continue;
    ++seen[f.stage.kind];
    double sole = 0.0;
    try {
      sole = label_from_soles(f.left_load, f.right_load);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Airborne) continue;
      throw;
    }
    switch (f.stage.kind) {
      case StageKind::LeftSwing:
        // Left leg swinging: right foot grounded.
        if (std::abs(sole + 1.0) <= kSwingLabelTolerance) kept.emplace_back(&f, -1.0);
        break;
      case StageKind::RightSwing:
        if (std::abs(sole - 1.0) <= kSwingLabelTolerance) kept.emplace_back(&f, 1.0);
        break;
      case StageKind::Treadmill:
        kept.emplace_back(&f, sole);
        break;
      case StageKind::Walk:
        break;
    }
  }
  for (auto [kind, name] : {std::pair{StageKind::LeftSwing, "left_swing"}, std::pair{StageKind::RightSwing, "right_swing"},
                            std::pair{StageKind::Treadmill, "treadmill"}}) {
    if (seen[kind] == 0)
      throw Error(ErrorKind::IncompleteTraining, std::string("training protocol is missing stage '") + name + "'");
  }

  TrainingSet set;
  set.Q.resize(Eigen::Index(kept.size()), 6);
  set.p.resize(Eigen::Index(kept.size()));
  set.provenance.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    set.Q.row(Eigen::Index(i)) = kept[i].first->q.transpose();
    set.p[Eigen::Index(i)] = kept[i].second;
    set.provenance.push_back(kept[i].first->stage);
  }
  return set;
}

}  // namespace exobench
