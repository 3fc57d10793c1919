#pragma once

// Planar sagittal rigid-body model of the exoskeleton for the two single-stance
// configurations, plus the friction/ripple lookup layer.
//
// Angle convention: every link has an absolute angle measured from the upward
// vertical, positive when the link's distal end moves forward. Joint angles are
// anatomical (hip flexion, knee flexion, ankle dorsiflexion positive); the chain
// maps them to absolute link angles through per-joint signs.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "exobench/error.hpp"

namespace exobench {

template <typename Scalar>
using Vector5 = Eigen::Matrix<Scalar, 5, 1>;
template <typename Scalar>
using Vector6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar>
using Matrix5 = Eigen::Matrix<Scalar, 5, 5>;

using Vector6d = Vector6<double>;
using Vector5d = Vector5<double>;
using Matrix5d = Matrix5<double>;

/// Index of each joint in the full 6-vector.
enum Joint : int { kRH = 0, kRK = 1, kRA = 2, kLH = 3, kLK = 4, kLA = 5 };

/// Hip and knee are motorised; ankles are passive.
inline constexpr std::array<bool, 6> kActuatedMask{true, true, false, true, true, false};

std::string_view joint_name(int joint);
/// Inverse of joint_name; throws Validation on unknown names.
int joint_from_name(std::string_view name);

struct LinkParams {
  double length = 0.0;        // m
  double mass = 0.0;          // kg
  double com_fraction = 0.5;  // COM distance from the proximal joint / length
};

/// Geometry and mass of the exoskeleton. Back mass defaults to the structure
/// plus the 4.3 kg battery carried on the back link.
struct ExoParams {
  LinkParams back{0.474, 4.3 + 1.2, 0.5};
  LinkParams thigh{0.407, 4.1, 0.5};
  LinkParams shank{0.402, 2.9, 0.5};
  LinkParams foot{0.095, 0.2, 0.5};  // length = ankle height above the sole
  double gravity = 9.81;

  static constexpr double kMinBackMass = 1.2;
  static constexpr double kMaxBackMass = 8.0;

  /// Throws Validation naming the offending field.
  void validate() const;
};

template <typename Scalar>
struct JointState {
  Vector6<Scalar> q = Vector6<Scalar>::Zero();    // rad
  Vector6<Scalar> qd = Vector6<Scalar>::Zero();   // rad/s
  Vector6<Scalar> qdd = Vector6<Scalar>::Zero();  // rad/s^2
  Scalar t = 0;                                   // s
};

using JointStated = JointState<double>;

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& v, const char* what) {
  if (!v.allFinite()) throw Error(ErrorKind::InvalidInput, std::string(what) + " has non-finite entries");
}

}  // namespace detail

/// Serial chain of N rigid links rotating in the sagittal plane, rooted at a
/// fixed base joint. Link k's absolute angle is
///   theta_k = theta_{k-1} + sign_k * q_k + offset_k.
/// Joint k+1 sits `length` along link k; a link may carry its child at its own
/// pivot (length 0) while extending elsewhere through `com`.
template <typename Scalar, int N>
class PlanarChain {
 public:
  using Vector = Eigen::Matrix<Scalar, N, 1>;
  using Matrix = Eigen::Matrix<Scalar, N, N>;
  using Jacobian = Eigen::Matrix<Scalar, 2, N>;

  struct Link {
    int joint_sign = 1;
    Scalar angle_offset = 0;
    Scalar length = 0;   // distance from this link's joint to the next joint
    Scalar mass = 0;
    Scalar com = 0;      // distance from this link's joint to its COM
    Scalar inertia = 0;  // rotational inertia about the COM
  };

  PlanarChain() = default;
  PlanarChain(const std::array<Link, N>& links, Scalar gravity) : links_(links), gravity_(gravity) {}

  const std::array<Link, N>& links() const { return links_; }
  Scalar gravity() const { return gravity_; }

  Vector absolute_angles(const Vector& q) const {
    Vector theta;
    Scalar acc = 0;
    for (int k = 0; k < N; ++k) {
      acc += Scalar(links_[k].joint_sign) * q[k] + links_[k].angle_offset;
      theta[k] = acc;
    }
    return theta;
  }

  /// COM position of link k relative to the base joint (x forward, y up).
  Eigen::Matrix<Scalar, 2, 1> com_position(const Vector& q, int k) const {
    using std::cos;
    using std::sin;
    const Vector theta = absolute_angles(q);
    Eigen::Matrix<Scalar, 2, 1> p = Eigen::Matrix<Scalar, 2, 1>::Zero();
    for (int j = 0; j < k; ++j) p += links_[j].length * direction(theta[j]);
    p += links_[k].com * direction(theta[k]);
    return p;
  }

  /// d(com_position(q, k))/dq.
  Jacobian com_jacobian(const Vector& q, int k) const { return com_jacobian_at(absolute_angles(q), k); }

  Scalar potential(const Vector& q) const {
    Scalar v = 0;
    for (int k = 0; k < N; ++k) v += links_[k].mass * gravity_ * com_position(q, k).y();
    return v;
  }

  /// Joint-space inertia: sum of m J_v^T J_v + I J_w^T J_w over links.
  Matrix inertia(const Vector& q) const {
    const Vector theta = absolute_angles(q);
    Matrix b = Matrix::Zero();
    Vector w = Vector::Zero();
    for (int k = 0; k < N; ++k) {
      w[k] = Scalar(links_[k].joint_sign);
      const Jacobian jv = com_jacobian_at(theta, k);
      b.noalias() += links_[k].mass * jv.transpose() * jv;
      b.noalias() += links_[k].inertia * w * w.transpose();
    }
    // Enforce exact symmetry; the two sums above are symmetric up to rounding.
    return Scalar(0.5) * (b + b.transpose());
  }

  /// Gradient of the potential energy: torques that hold the chain still.
  Vector gravity_torque(const Vector& q) const {
    const Vector theta = absolute_angles(q);
    Vector g = Vector::Zero();
    for (int k = 0; k < N; ++k)
      g.noalias() += links_[k].mass * gravity_ * com_jacobian_at(theta, k).row(1).transpose();
    return g;
  }

 private:
  static Eigen::Matrix<Scalar, 2, 1> direction(Scalar theta) {
    using std::cos;
    using std::sin;
    return {sin(theta), cos(theta)};
  }
  static Eigen::Matrix<Scalar, 2, 1> direction_derivative(Scalar theta) {
    using std::cos;
    using std::sin;
    return {cos(theta), -sin(theta)};
  }

  Jacobian com_jacobian_at(const Vector& theta, int k) const {
    Jacobian j = Jacobian::Zero();
    Eigen::Matrix<Scalar, 2, 1> acc = links_[k].com * direction_derivative(theta[k]);
    j.col(k) = Scalar(links_[k].joint_sign) * acc;
    for (int i = k - 1; i >= 0; --i) {
      acc += links_[i].length * direction_derivative(theta[i]);
      j.col(i) = Scalar(links_[i].joint_sign) * acc;
    }
    return j;
  }

  std::array<Link, N> links_{};
  Scalar gravity_ = Scalar(9.81);
};

enum class StanceSide { Left, Right };

/// One single-stance model: stance shank -> stance thigh -> back -> swing thigh
/// -> swing shank (with the swing foot rigidly attached), rooted at the stance
/// ankle. The swing-side ankle is not part of the chain.
template <typename Scalar>
class StanceModel {
 public:
  using Chain = PlanarChain<Scalar, 5>;

  StanceModel(StanceSide side, const ExoParams& params) : side_(side) {
    params.validate();
    if (side == StanceSide::Left)
      joints_ = {kLA, kLK, kLH, kRH, kRK};
    else
      joints_ = {kRA, kRK, kRH, kLH, kLK};
    excluded_ = side == StanceSide::Left ? kRA : kLA;
    chain_ = Chain(build_links(params), Scalar(params.gravity));
  }

  StanceSide side() const { return side_; }
  const Chain& chain() const { return chain_; }
  /// Full-state index of each chain joint.
  const std::array<int, 5>& joints() const { return joints_; }
  int excluded_joint() const { return excluded_; }

  Vector5<Scalar> gather(const Vector6<Scalar>& full) const {
    Vector5<Scalar> out;
    for (int i = 0; i < 5; ++i) out[i] = full[joints_[i]];
    return out;
  }

  /// Places a stance-space vector into the full 6-vector; the excluded joint gets 0.
  Vector6<Scalar> scatter(const Vector5<Scalar>& reduced) const {
    Vector6<Scalar> out = Vector6<Scalar>::Zero();
    for (int i = 0; i < 5; ++i) out[joints_[i]] = reduced[i];
    return out;
  }

 private:
  static std::array<typename Chain::Link, 5> build_links(const ExoParams& p) {
    using Link = typename Chain::Link;
    auto rod = [](const LinkParams& lp, int sign, Scalar offset, Scalar next_joint) {
      Link l;
      l.joint_sign = sign;
      l.angle_offset = offset;
      l.length = next_joint;
      l.mass = Scalar(lp.mass);
      l.com = Scalar(lp.com_fraction * lp.length);
      l.inertia = Scalar(lp.mass * lp.length * lp.length / 12.0);
      return l;
    };
    // Knee flexion tilts the upper segment back relative to the lower one and
    // hip flexion on the swing side swings the thigh forward, hence the signs.
    Link stance_shank = rod(p.shank, +1, 0, Scalar(p.shank.length));
    Link stance_thigh = rod(p.thigh, -1, 0, Scalar(p.thigh.length));
    Link back = rod(p.back, +1, 0, 0);
    Link swing_thigh = rod(p.thigh, -1, Scalar(std::numbers::pi), Scalar(p.thigh.length));
    Link swing_shank = rod(p.shank, +1, 0, Scalar(p.shank.length));

    // Swing foot as a point mass below the swing ankle, merged into the shank.
    const Scalar ms = swing_shank.mass;
    const Scalar mf = Scalar(p.foot.mass);
    const Scalar cs = swing_shank.com;
    const Scalar cf = Scalar(p.shank.length + p.foot.com_fraction * p.foot.length);
    const Scalar m = ms + mf;
    const Scalar c = (ms * cs + mf * cf) / m;
    swing_shank.inertia += ms * (cs - c) * (cs - c) + mf * (cf - c) * (cf - c);
    swing_shank.mass = m;
    swing_shank.com = c;

    return {stance_shank, stance_thigh, back, swing_thigh, swing_shank};
  }

  StanceSide side_;
  std::array<int, 5> joints_{};
  int excluded_ = 0;
  Chain chain_;
};

using StanceModeld = StanceModel<double>;

/// Piecewise-linear table; clamps to the end values outside the breakpoints.
class LookupTable1D {
 public:
  LookupTable1D() = default;
  /// Throws Validation unless breakpoints are strictly increasing and sizes match.
  LookupTable1D(std::vector<double> breakpoints, std::vector<double> values);

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }

  double operator()(double x) const;

  /// Samples f on [lo, hi] with `count` equally spaced breakpoints.
  template <typename F>
  static LookupTable1D sample(F&& f, double lo, double hi, int count) {
    std::vector<double> xs(count), ys(count);
    for (int i = 0; i < count; ++i) {
      xs[i] = lo + (hi - lo) * double(i) / double(count - 1);
      ys[i] = f(xs[i]);
    }
    return LookupTable1D(std::move(xs), std::move(ys));
  }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

/// Velocity-indexed friction and position-indexed ripple tables per joint.
struct FrictionRippleTables {
  std::array<std::optional<LookupTable1D>, 6> friction;  // Nm vs rad/s
  std::array<std::optional<LookupTable1D>, 6> ripple;    // Nm vs rad

  /// All actuated joints mapped to zero.
  static FrictionRippleTables zeros();
  /// Viscous + smoothed Coulomb friction and a small sinusoidal ripple.
  static FrictionRippleTables synthetic_default();
};

/// Per-joint tau_F(qd) + tau_r(q); passive ankles contribute zero.
template <typename Scalar>
Vector6<Scalar> friction_ripple(const FrictionRippleTables& tables, const Vector6<Scalar>& q,
                                const Vector6<Scalar>& qd) {
  detail::require_finite(q, "q");
  detail::require_finite(qd, "qd");
  Vector6<Scalar> out = Vector6<Scalar>::Zero();
  for (int j = 0; j < 6; ++j) {
    if (!kActuatedMask[j]) continue;
    if (!tables.friction[j] || !tables.ripple[j])
      throw Error(ErrorKind::Configuration,
                  "missing friction/ripple table for actuated joint " + std::string(joint_name(j)));
    out[j] = Scalar((*tables.friction[j])(double(qd[j]))) + Scalar((*tables.ripple[j])(double(q[j])));
  }
  return out;
}

template <typename Scalar>
Matrix5<Scalar> inertia_matrix(const StanceModel<Scalar>& model, const Vector5<Scalar>& q5) {
  detail::require_finite(q5, "q5");
  return model.chain().inertia(q5);
}

template <typename Scalar>
Vector5<Scalar> gravity_vector(const StanceModel<Scalar>& model, const Vector5<Scalar>& q5) {
  detail::require_finite(q5, "q5");
  return model.chain().gravity_torque(q5);
}

template <typename Scalar>
Scalar potential_energy(const StanceModel<Scalar>& model, const Vector5<Scalar>& q5) {
  detail::require_finite(q5, "q5");
  return model.chain().potential(q5);
}

/// B(q5) q5dd + G(q5) in stance space, without the friction/ripple layer,
/// scattered to the full 6-vector.
template <typename Scalar>
Vector6<Scalar> stance_dynamics(const StanceModel<Scalar>& model, const Vector6<Scalar>& q,
                                const std::optional<Vector6<Scalar>>& qdd) {
  const Vector5<Scalar> q5 = model.gather(q);
  Vector5<Scalar> tau5 = gravity_vector(model, q5);
  if (qdd) {
    detail::require_finite(*qdd, "qdd");
    tau5.noalias() += inertia_matrix(model, q5) * model.gather(*qdd);
  }
  return model.scatter(tau5);
}

/// Full single-stance compensation torque: scattered B q5dd + G plus friction and ripple.
template <typename Scalar>
Vector6<Scalar> stance_torque(const StanceModel<Scalar>& model, const JointState<Scalar>& state,
                              const FrictionRippleTables& tables) {
  return stance_dynamics<Scalar>(model, state.q, state.qdd) + friction_ripple(tables, state.q, state.qd);
}

struct TimedJoints {
  double t = 0.0;
  Vector6d q = Vector6d::Zero();
};

/// Second derivative of the quadratic through the last three samples. Reduces to
/// the central difference (q2 - 2 q1 + q0)/h^2 for uniform spacing. Returns
/// nullopt with fewer than three samples or non-increasing timestamps.
std::optional<Vector6d> estimate_acceleration(std::span<const TimedJoints> history);

/// Streaming velocity/acceleration estimate: finite differences over the last
/// three samples followed by a single-pole low-pass.
class AccelerationEstimator {
 public:
  explicit AccelerationEstimator(double cutoff_hz = 20.0);

  /// Requires t strictly greater than the previous sample's time.
  void push(double t, const Vector6d& q);
  void reset();

  bool ready() const { return count_ >= 3; }
  std::optional<Vector6d> acceleration() const;
  std::optional<Vector6d> raw_acceleration() const;
  std::optional<Vector6d> velocity() const;
  double cutoff_hz() const { return cutoff_hz_; }

 private:
  double cutoff_hz_;
  std::array<TimedJoints, 3> ring_{};
  int count_ = 0;
  bool filter_started_ = false;
  Vector6d raw_acc_ = Vector6d::Zero();
  Vector6d acc_ = Vector6d::Zero();
  Vector6d vel_ = Vector6d::Zero();
};

}  // namespace exobench
