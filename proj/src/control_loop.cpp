#include "exobench/blend_control.hpp"

#include <chrono>

#include "exobench/csv.hpp"

namespace exobench {

AssistCommand assist(double t, const Vector6d& q, const Vector6d& qd, const std::optional<Vector6d>& qdd,
                     const StanceModeld& left, const StanceModeld& right, const GaitRegressor& reg,
                     const FrictionRippleTables& tables, BlendMode mode) {
  AssistCommand cmd;
  cmd.t = t;
  cmd.raw_phase = reg.phase(q);
  cmd.gains = mode == BlendMode::Continuous ? gains(cmd.raw_phase) : hard_switch_gains(cmd.raw_phase);
  cmd.degraded = !qdd.has_value();
  cmd.tau = blend_torque(left, right, tables, cmd.gains, q, qd, qdd);
  return cmd;
}

nlohmann::json LoopConfig::to_json() const {
  return {{"rate_hz", rate_hz},
          {"accel_cutoff_hz", accel_cutoff_hz},
          {"degraded_policy", degraded_policy == DegradedPolicy::ZeroTorque ? "zero" : "gravity"},
          {"blend", blend == BlendMode::HardSwitch ? "hard" : "continuous"}};
}

LoopConfig LoopConfig::from_json(const nlohmann::json& j) {
  LoopConfig c;
  try {
    c.rate_hz = j.value("rate_hz", c.rate_hz);
    c.accel_cutoff_hz = j.value("accel_cutoff_hz", c.accel_cutoff_hz);
    const std::string policy = j.value("degraded_policy", std::string("gravity"));
    if (policy == "zero")
      c.degraded_policy = DegradedPolicy::ZeroTorque;
    else if (policy != "gravity")
      throw Error(ErrorKind::Validation, "degraded_policy must be 'gravity' or 'zero'");
    const std::string blend = j.value("blend", std::string("continuous"));
    if (blend == "hard")
      c.blend = BlendMode::HardSwitch;
    else if (blend != "continuous")
      throw Error(ErrorKind::Validation, "blend must be 'continuous' or 'hard'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation, std::string("loop config: ") + e.what());
  }
  if (!(c.rate_hz > 0.0) || !(c.accel_cutoff_hz > 0.0))
    throw Error(ErrorKind::Validation, "loop rate and cutoff must be > 0");
  return c;
}

ControlLoop::ControlLoop(const Calibration& calibration, GaitRegressor regressor, LoopConfig config)
    : config_(config),
      left_(StanceSide::Left, calibration.params),
      right_(StanceSide::Right, calibration.params),
      tables_(calibration.tables),
      regressor_(std::move(regressor)),
      estimator_(config.accel_cutoff_hz) {
  // Fail at construction rather than on the first step.
  friction_ripple<double>(tables_, Vector6d::Zero(), Vector6d::Zero());
}

void ControlLoop::reset() {
  estimator_.reset();
  last_t_.reset();
  steps_ = 0;
}

AssistCommand ControlLoop::step(const SensorFrame& frame) {
  const auto start = std::chrono::steady_clock::now();
  if (last_t_ && frame.t < *last_t_)
    throw Error(ErrorKind::OutOfOrder, "frame at t=" + csv::format_number(frame.t) + " precedes t=" +
                                           csv::format_number(*last_t_) + "; dropped");
  if (!last_t_ || frame.t > *last_t_) estimator_.push(frame.t, frame.q);
  last_t_ = frame.t;

  const Vector6d qd = estimator_.velocity().value_or(Vector6d::Zero());
  const std::optional<Vector6d> qdd = estimator_.acceleration();
  AssistCommand cmd = assist(frame.t, frame.q, qd, qdd, left_, right_, regressor_, tables_, config_.blend);
  if (cmd.degraded && config_.degraded_policy == DegradedPolicy::ZeroTorque) cmd.tau.setZero();
  ++steps_;
  cmd.step_time_us =
      std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();
  return cmd;
}

std::string commands_to_csv(const std::vector<AssistCommand>& commands) {
  std::string out = "t,raw_phase,gamma_l,tau_RH,tau_RK,tau_RA,tau_LH,tau_LK,tau_LA,step_time_us,degraded\n";
  out.reserve(commands.size() * 160);
  for (const auto& c : commands) {
    out += csv::format_number(c.t);
    out += ',';
    out += csv::format_number(c.raw_phase);
    out += ',';
    out += csv::format_number(c.gains.left);
    for (int j = 0; j < 6; ++j) {
      out += ',';
      out += csv::format_number(c.tau[j]);
    }
    out += ',';
    out += csv::format_number(c.step_time_us);
    out += c.degraded ? ",1\n" : ",0\n";
  }
  return out;
}

std::vector<AssistCommand> commands_from_csv(const std::string& text, const std::string& origin) {
  const csv::Table table = csv::parse(text, origin);
  const std::size_t ct = table.column("t");
  const std::size_t cp = table.column("raw_phase");
  const std::size_t cg = table.column("gamma_l");
  static constexpr std::array<const char*, 6> cols{"tau_RH", "tau_RK", "tau_RA", "tau_LH", "tau_LK", "tau_LA"};
  std::array<std::size_t, 6> ctau{};
  for (int j = 0; j < 6; ++j) ctau[j] = table.column(cols[j]);
  const std::size_t cs = table.column("step_time_us");
  std::optional<std::size_t> cd;
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (table.header[i] == "degraded") cd = i;

  std::vector<AssistCommand> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    AssistCommand c;
    c.t = table.number(r, ct);
    c.raw_phase = table.number(r, cp);
    c.gains.left = table.number(r, cg);
    c.gains.right = 1.0 - c.gains.left;
    for (int j = 0; j < 6; ++j) c.tau[j] = table.number(r, ctau[j]);
    c.step_time_us = table.number(r, cs);
    c.degraded = cd ? table.integer(r, *cd) != 0 : false;
    out.push_back(c);
  }
  return out;
}

}  // namespace exobench
