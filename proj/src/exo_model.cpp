#include "exobench/exo_model.hpp"

#include <algorithm>

namespace exobench {

namespace {
constexpr std::array<std::string_view, 6> kJointNames{"RH", "RK", "RA", "LH", "LK", "LA"};

void check_link(const LinkParams& l, const char* name) {
  if (!(l.length > 0.0) || !std::isfinite(l.length))
    throw Error(ErrorKind::Validation, std::string(name) + " length must be > 0");
  if (!(l.mass > 0.0) || !std::isfinite(l.mass))
    throw Error(ErrorKind::Validation, std::string(name) + " mass must be > 0");
  if (!(l.com_fraction >= 0.0 && l.com_fraction <= 1.0))
    throw Error(ErrorKind::Validation, std::string(name) + " COM fraction must lie in [0, 1]");
}
}  // namespace

std::string_view joint_name(int joint) {
  if (joint < 0 || joint >= 6) return "?";
  return kJointNames[joint];
}

int joint_from_name(std::string_view name) {
  for (int j = 0; j < 6; ++j)
    if (kJointNames[j] == name) return j;
  throw Error(ErrorKind::Validation, "unknown joint '" + std::string(name) + "'");
}

void ExoParams::validate() const {
  check_link(back, "back");
  check_link(thigh, "thigh");
  check_link(shank, "shank");
  check_link(foot, "foot");
  if (back.mass < kMinBackMass || back.mass > kMaxBackMass)
    throw Error(ErrorKind::Validation, "back mass must lie in [1.2, 8] kg");
  if (!(gravity > 0.0) || !std::isfinite(gravity))
    throw Error(ErrorKind::Validation, "gravity must be > 0");
}

LookupTable1D::LookupTable1D(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.empty()) throw Error(ErrorKind::Validation, "lookup table has no breakpoints");
  if (breakpoints_.size() != values_.size())
    throw Error(ErrorKind::Validation, "lookup table breakpoints and values differ in length");
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (!std::isfinite(breakpoints_[i]) || !std::isfinite(values_[i]))
      throw Error(ErrorKind::Validation, "lookup table has non-finite entries");
    if (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1]))
      throw Error(ErrorKind::Validation, "lookup table breakpoints must be strictly increasing");
  }
}

double LookupTable1D::operator()(double x) const {
  if (x <= breakpoints_.front()) return values_.front();
  if (x >= breakpoints_.back()) return values_.back();
  const auto hi = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  const auto i = static_cast<std::size_t>(hi - breakpoints_.begin());
  const double x0 = breakpoints_[i - 1];
  const double x1 = breakpoints_[i];
  const double s = (x - x0) / (x1 - x0);
  return values_[i - 1] + s * (values_[i] - values_[i - 1]);
}

FrictionRippleTables FrictionRippleTables::zeros() {
  FrictionRippleTables t;
  for (int j = 0; j < 6; ++j) {
    if (!kActuatedMask[j]) continue;
    t.friction[j] = LookupTable1D({-1.0, 1.0}, {0.0, 0.0});
    t.ripple[j] = LookupTable1D({-1.0, 1.0}, {0.0, 0.0});
  }
  return t;
}

FrictionRippleTables FrictionRippleTables::synthetic_default() {
  FrictionRippleTables t;
  for (int j = 0; j < 6; ++j) {
    if (!kActuatedMask[j]) continue;
    const bool hip = (j == kRH || j == kLH);
    const double viscous = hip ? 0.6 : 0.4;  // Nm s/rad
    const double coulomb = hip ? 0.8 : 0.6;  // Nm
    const double smoothing = 0.25;           // rad/s
    t.friction[j] = LookupTable1D::sample(
        [=](double v) { return viscous * v + coulomb * std::tanh(v / smoothing); }, -8.0, 8.0, 161);
    const double ripple = hip ? 0.12 : 0.08;
    t.ripple[j] = LookupTable1D::sample([=](double q) { return ripple * std::sin(6.0 * q); },
                                        -std::numbers::pi, std::numbers::pi, 241);
  }
  return t;
}

std::optional<Vector6d> estimate_acceleration(std::span<const TimedJoints> history) {
  if (history.size() < 3) return std::nullopt;
  const auto& s0 = history[history.size() - 3];
  const auto& s1 = history[history.size() - 2];
  const auto& s2 = history[history.size() - 1];
  const double h1 = s1.t - s0.t;
  const double h2 = s2.t - s1.t;
  if (!(h1 > 0.0) || !(h2 > 0.0)) return std::nullopt;
  return (2.0 / (h1 + h2)) * ((s2.q - s1.q) / h2 - (s1.q - s0.q) / h1);
}

AccelerationEstimator::AccelerationEstimator(double cutoff_hz) : cutoff_hz_(cutoff_hz) {
  if (!(cutoff_hz > 0.0)) throw Error(ErrorKind::Validation, "cutoff frequency must be > 0");
}

void AccelerationEstimator::reset() {
  count_ = 0;
  filter_started_ = false;
  raw_acc_.setZero();
  acc_.setZero();
  vel_.setZero();
}

void AccelerationEstimator::push(double t, const Vector6d& q) {
  detail::require_finite(q, "q");
  if (count_ > 0 && !(t > ring_[2].t))
    throw Error(ErrorKind::OutOfOrder, "estimator samples must have increasing timestamps");
  ring_[0] = ring_[1];
  ring_[1] = ring_[2];
  ring_[2] = TimedJoints{t, q};
  count_ = std::min(count_ + 1, 3);
  if (count_ < 2) return;

  const double h2 = ring_[2].t - ring_[1].t;
  const Vector6d slope = (ring_[2].q - ring_[1].q) / h2;
  const double alpha = 1.0 - std::exp(-2.0 * std::numbers::pi * cutoff_hz_ * h2);
  if (count_ == 2) {
    vel_ = slope;
    return;
  }
  raw_acc_ = *estimate_acceleration(ring_);
  // Derivative at t2 of the quadratic through the three samples.
  const Vector6d raw_vel = slope + 0.5 * h2 * raw_acc_;
  if (!filter_started_) {
    acc_ = raw_acc_;
    filter_started_ = true;
  } else {
    acc_ += alpha * (raw_acc_ - acc_);
  }
  vel_ += alpha * (raw_vel - vel_);
}

std::optional<Vector6d> AccelerationEstimator::acceleration() const {
  if (!ready()) return std::nullopt;
  return acc_;
}

std::optional<Vector6d> AccelerationEstimator::raw_acceleration() const {
  if (!ready()) return std::nullopt;
  return raw_acc_;
}

std::optional<Vector6d> AccelerationEstimator::velocity() const {
  if (count_ < 2) return std::nullopt;
  return vel_;
}

}  // namespace exobench
