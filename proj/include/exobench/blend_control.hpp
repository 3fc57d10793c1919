#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "exobench/calibration.hpp"
#include "exobench/exo_model.hpp"
#include "exobench/gait_segmentation.hpp"
#include "exobench/sensor_stream.hpp"

namespace exobench {

template <typename Scalar>
struct BlendGains {
  Scalar left = Scalar(0.5);
  Scalar right = Scalar(0.5);
};

/// gamma_L = clamp((raw_phase + 1) / 2, 0, 1), gamma_R = 1 - gamma_L.
template <typename Scalar>
BlendGains<Scalar> gains(Scalar raw_phase) {
  if (!std::isfinite(double(raw_phase))) throw Error(ErrorKind::InvalidInput, "raw phase is not finite");
  const Scalar left = std::clamp(Scalar(0.5) * (raw_phase + Scalar(1)), Scalar(0), Scalar(1));
  return {left, Scalar(1) - left};
}

/// All-or-nothing switch at raw phase 0. Only for comparison against blending.
template <typename Scalar>
BlendGains<Scalar> hard_switch_gains(Scalar raw_phase) {
  if (!std::isfinite(double(raw_phase))) throw Error(ErrorKind::InvalidInput, "raw phase is not finite");
  return raw_phase >= Scalar(0) ? BlendGains<Scalar>{Scalar(1), Scalar(0)} : BlendGains<Scalar>{Scalar(0), Scalar(1)};
}

/// gamma_L (B_L qdd_L + G_L) + gamma_R (B_R qdd_R + G_R) + tau_F(qd) + tau_r(q).
/// Friction and ripple enter once. Without `qdd` the inertial terms are omitted.
template <typename Scalar>
Vector6<Scalar> blend_torque(const StanceModel<Scalar>& left, const StanceModel<Scalar>& right,
                             const FrictionRippleTables& tables, const BlendGains<Scalar>& g,
                             const Vector6<Scalar>& q, const Vector6<Scalar>& qd,
                             const std::optional<Vector6<Scalar>>& qdd) {
  const Vector6<Scalar> left_dyn = stance_dynamics(left, q, qdd);
  const Vector6<Scalar> right_dyn = stance_dynamics(right, q, qdd);
  return g.left * left_dyn + g.right * right_dyn + friction_ripple(tables, q, qd);
}

enum class BlendMode { Continuous, HardSwitch };

/// What to command while no acceleration estimate exists yet.
enum class DegradedPolicy {
  GravityFrictionRipple,  // drop only the inertial terms
  ZeroTorque,
};

struct AssistCommand {
  double t = 0.0;
  Vector6d tau = Vector6d::Zero();  // Nm; ankle entries are informational
  std::array<bool, 6> actuated = kActuatedMask;
  BlendGains<double> gains;
  double raw_phase = 0.0;
  bool degraded = false;
  double step_time_us = 0.0;
};

/// Blended assistance for one joint state. `qdd` = nullopt gives a degraded command.
AssistCommand assist(double t, const Vector6d& q, const Vector6d& qd, const std::optional<Vector6d>& qdd,
                     const StanceModeld& left, const StanceModeld& right, const GaitRegressor& reg,
                     const FrictionRippleTables& tables, BlendMode mode = BlendMode::Continuous);

inline AssistCommand assist(const JointStated& state, const StanceModeld& left, const StanceModeld& right,
                            const GaitRegressor& reg, const FrictionRippleTables& tables,
                            BlendMode mode = BlendMode::Continuous) {
  return assist(state.t, state.q, state.qd, state.qdd, left, right, reg, tables, mode);
}

struct LoopConfig {
  double rate_hz = 5000.0;
  double accel_cutoff_hz = 20.0;
  DegradedPolicy degraded_policy = DegradedPolicy::GravityFrictionRipple;
  BlendMode blend = BlendMode::Continuous;

  nlohmann::json to_json() const;
  static LoopConfig from_json(const nlohmann::json& j);
};

/// Single-threaded control pipeline: sensor frame -> derivative estimate -> assistance.
class ControlLoop {
 public:
  ControlLoop(const Calibration& calibration, GaitRegressor regressor, LoopConfig config = {});

  /// Throws OutOfOrder (and drops the frame) if the timestamp goes backwards.
  /// A repeated timestamp reuses the current derivative estimates.
  AssistCommand step(const SensorFrame& frame);
  void reset();

  const LoopConfig& config() const { return config_; }
  const StanceModeld& left_model() const { return left_; }
  const StanceModeld& right_model() const { return right_; }
  std::size_t steps() const { return steps_; }

 private:
  LoopConfig config_;
  StanceModeld left_;
  StanceModeld right_;
  FrictionRippleTables tables_;
  GaitRegressor regressor_;
  AccelerationEstimator estimator_;
  std::optional<double> last_t_;
  std::size_t steps_ = 0;
};

/// CSV columns: t,raw_phase,gamma_l,tau_RH,...,tau_LA,step_time_us
std::string commands_to_csv(const std::vector<AssistCommand>& commands);
std::vector<AssistCommand> commands_from_csv(const std::string& text, const std::string& origin = "<memory>");

}  // namespace exobench
