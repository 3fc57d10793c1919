#include <doctest.h>

#include <random>

#include "exobench/calibration.hpp"
#include "exobench/exo_model.hpp"

using namespace exobench;

namespace {

Vector5d random_q5(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  Vector5d q;
  for (int i = 0; i < 5; ++i) q[i] = u(rng);
  return q;
}

Vector6d random_q6(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector6d q;
  for (int i = 0; i < 6; ++i) q[i] = u(rng);
  return q;
}

// Central difference of the potential energy, evaluated through COM positions.
Vector5d potential_gradient_fd(const StanceModeld& m, const Vector5d& q) {
  constexpr double h = 1e-6;
  Vector5d g;
  for (int i = 0; i < 5; ++i) {
    Vector5d qp = q, qm = q;
    qp[i] += h;
    qm[i] -= h;
    g[i] = (potential_energy(m, qp) - potential_energy(m, qm)) / (2 * h);
  }
  return g;
}

Vector6d swap_legs(const Vector6d& v) {
  Vector6d out;
  out << v[kLH], v[kLK], v[kLA], v[kRH], v[kRK], v[kRA];
  return out;
}

}  // namespace

TEST_CASE("point mass pendulum inertia is m l^2") {
  using Chain = PlanarChain<double, 1>;
  Chain::Link link;
  link.mass = 3.0;
  link.com = 0.7;
  Chain chain({link}, 9.81);
  for (double q : {-2.0, 0.0, 0.3, 1.9}) {
    Eigen::Matrix<double, 1, 1> qv;
    qv << q;
    CHECK(chain.inertia(qv)(0, 0) == doctest::Approx(3.0 * 0.49).epsilon(1e-14));
  }
}

TEST_CASE("two-link unit chain matches the textbook inertia formula") {
  using Chain = PlanarChain<double, 2>;
  Chain::Link rod;
  rod.mass = 1.0;
  rod.length = 1.0;
  rod.com = 0.5;
  rod.inertia = 1.0 / 12.0;
  Chain chain({rod, rod}, 9.81);

  // B11 = I1 + I2 + m1 c1^2 + m2 (l1^2 + c2^2 + 2 l1 c2 cos q2), etc.
  auto textbook = [](double q2) {
    const double I = 1.0 / 12.0, c = 0.5, l = 1.0;
    Eigen::Matrix2d b;
    b(0, 0) = 2 * I + c * c + (l * l + c * c + 2 * l * c * std::cos(q2));
    b(0, 1) = b(1, 0) = I + c * c + l * c * std::cos(q2);
    b(1, 1) = I + c * c;
    return b;
  };
  Eigen::Vector2d q(0.0, 0.0);
  const Eigen::Matrix2d b0 = chain.inertia(q);
  CHECK(b0(0, 0) == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
  CHECK(b0(0, 1) == doctest::Approx(5.0 / 6.0).epsilon(1e-14));
  CHECK(b0(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK((b0 - textbook(0.0)).cwiseAbs().maxCoeff() < 1e-14);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector2d qr(u(rng), u(rng));
    CHECK((chain.inertia(qr) - textbook(qr[1])).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("stance inertia is symmetric positive definite") {
  std::mt19937_64 rng(11);
  for (auto side : {StanceSide::Left, StanceSide::Right}) {
    StanceModeld model(side, ExoParams{});
    for (int i = 0; i < 1000; ++i) {
      const Matrix5d b = inertia_matrix(model, random_q5(rng));
      CHECK((b - b.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      Eigen::SelfAdjointEigenSolver<Matrix5d> eig(b);
      CHECK(eig.eigenvalues().minCoeff() > 0.0);
    }
  }
}

TEST_CASE("gravity vector") {
  StanceModeld model(StanceSide::Left, ExoParams{});

  SUBCASE("vertical chain carries no gravity torque") {
    CHECK(gravity_vector(model, Vector5d(Vector5d::Zero())).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("horizontal thigh pendulum") {
    const ExoParams p;
    using Chain = PlanarChain<double, 1>;
    Chain::Link thigh;
    thigh.mass = p.thigh.mass;
    thigh.length = p.thigh.length;
    thigh.com = p.thigh.com_fraction * p.thigh.length;
    Chain chain({thigh}, p.gravity);
    Eigen::Matrix<double, 1, 1> q;
    q << -std::numbers::pi / 2;
    // m g l c = 4.1 * 9.81 * 0.2035
    CHECK(chain.gravity_torque(q)[0] == doctest::Approx(8.185).epsilon(1e-3 / 8.185));
    CHECK(chain.gravity_torque(q)[0] == doctest::Approx(4.1 * 9.81 * 0.2035).epsilon(1e-12));
  }

  SUBCASE("matches the finite-difference potential gradient") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 1000; ++i) {
      const Vector5d q = random_q5(rng);
      const Vector5d g = gravity_vector(model, q);
      const Vector5d fd = potential_gradient_fd(model, q);
      CHECK((g - fd).norm() <= 1e-6 * g.norm());
    }
  }

  SUBCASE("non-finite input") {
    Vector5d q = Vector5d::Zero();
    q[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(gravity_vector(model, q), Error);
    CHECK_THROWS_AS(inertia_matrix(model, q), Error);
  }
}

TEST_CASE("stance model joint maps") {
  StanceModeld left(StanceSide::Left, ExoParams{});
  StanceModeld right(StanceSide::Right, ExoParams{});
  CHECK(left.joints() == std::array<int, 5>{kLA, kLK, kLH, kRH, kRK});
  CHECK(right.joints() == std::array<int, 5>{kRA, kRK, kRH, kLH, kLK});
  CHECK(left.excluded_joint() == kRA);
  CHECK(right.excluded_joint() == kLA);

  Vector6d v;
  v << 1, 2, 3, 4, 5, 6;
  const Vector6d back = left.scatter(left.gather(v));
  CHECK(back[kRA] == 0.0);
  for (int j : left.joints()) CHECK(back[j] == v[j]);
}

TEST_CASE("lookup tables") {
  LookupTable1D t({-1.0, 0.0, 1.0}, {1.0, 0.0, 2.0});
  CHECK(t(0.0) == 0.0);
  CHECK(t(0.5) == doctest::Approx(1.0));
  LookupTable1D mid({0.0, 1.0}, {1.0, 2.0});
  CHECK(mid(0.5) == doctest::Approx(1.5));
  CHECK(t(5.0) == 2.0);
  CHECK(t(-5.0) == 1.0);
  CHECK_THROWS_AS(LookupTable1D({0.0, 0.0}, {1.0, 2.0}), Error);
  CHECK_THROWS_AS(LookupTable1D({0.0, 1.0}, {1.0}), Error);

  SUBCASE("continuity across breakpoints") {
    const auto tables = FrictionRippleTables::synthetic_default();
    const auto& f = *tables.friction[kRH];
    for (double x : f.breakpoints()) CHECK(std::abs(f(x + 1e-9) - f(x - 1e-9)) < 1e-6);
  }
}

TEST_CASE("friction and ripple") {
  FrictionRippleTables tables = FrictionRippleTables::zeros();
  tables.friction[kRK] = LookupTable1D({0.0, 1.0}, {1.0, 2.0});
  Vector6d q = Vector6d::Zero(), qd = Vector6d::Zero();
  qd[kRK] = 0.5;
  qd[kLA] = 3.0;
  const Vector6d tau = friction_ripple(tables, q, qd);
  CHECK(tau[kRK] == doctest::Approx(1.5));
  CHECK(tau[kLA] == 0.0);
  CHECK(tau[kRA] == 0.0);

  tables.ripple[kLH].reset();
  CHECK_THROWS_WITH_AS(friction_ripple(tables, q, qd), doctest::Contains("LH"), Error);
}

TEST_CASE("stance torque") {
  const ExoParams params;
  StanceModeld left(StanceSide::Left, params);
  StanceModeld right(StanceSide::Right, params);
  const auto zero_tables = FrictionRippleTables::zeros();
  const auto tables = FrictionRippleTables::synthetic_default();
  std::mt19937_64 rng(21);

  SUBCASE("static pose reduces to scattered gravity") {
    JointStated s;
    s.q = random_q6(rng);
    const Vector6d tau = stance_torque(left, s, zero_tables);
    CHECK((tau - left.scatter(gravity_vector(left, left.gather(s.q)))).cwiseAbs().maxCoeff() == 0.0);
    CHECK(tau[kRA] == 0.0);
  }

  SUBCASE("vertical static pose gives zero") {
    CHECK(stance_torque(left, JointStated{}, zero_tables).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("equals the sum of its parts") {
    for (int i = 0; i < 100; ++i) {
      JointStated s;
      s.q = random_q6(rng);
      s.qd = random_q6(rng, 3.0);
      s.qdd = random_q6(rng, 20.0);
      const Vector5d q5 = left.gather(s.q);
      const Vector6d parts = left.scatter(inertia_matrix(left, q5) * left.gather(s.qdd) + gravity_vector(left, q5)) +
                             friction_ripple(tables, s.q, s.qd);
      CHECK((stance_torque(left, s, tables) - parts).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  SUBCASE("linear in acceleration") {
    for (int i = 0; i < 100; ++i) {
      JointStated s;
      s.q = random_q6(rng);
      s.qd = random_q6(rng, 3.0);
      s.qdd = random_q6(rng, 20.0);
      JointStated s0 = s, sa = s;
      s0.qdd.setZero();
      const double alpha = 2.5;
      sa.qdd = alpha * s.qdd;
      const Vector6d base = stance_torque(left, s0, tables);
      const Vector6d lhs = stance_torque(left, sa, tables) - base;
      const Vector6d rhs = alpha * (stance_torque(left, s, tables) - base);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  SUBCASE("left and right models mirror each other") {
    for (int i = 0; i < 100; ++i) {
      JointStated s;
      s.q = random_q6(rng);
      s.qdd = random_q6(rng, 20.0);
      JointStated mirrored;
      mirrored.q = swap_legs(s.q);
      mirrored.qdd = swap_legs(s.qdd);
      const Vector6d tl = stance_torque(left, s, zero_tables);
      const Vector6d tr = stance_torque(right, mirrored, zero_tables);
      CHECK((swap_legs(tl) - tr).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("acceleration estimate") {
  std::vector<TimedJoints> h;
  const double dt = 1.0 / 5000.0;

  SUBCASE("needs three samples") {
    h.push_back({0.0, Vector6d::Ones()});
    h.push_back({dt, Vector6d::Ones()});
    CHECK_FALSE(estimate_acceleration(h).has_value());
  }
  SUBCASE("constant history") {
    for (int i = 0; i < 3; ++i) h.push_back({i * dt, Vector6d::Constant(0.4)});
    CHECK(estimate_acceleration(h)->cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("linear ramp") {
    for (int i = 0; i < 3; ++i) h.push_back({i * dt, Vector6d::Constant(1.7 * i * dt)});
    CHECK(estimate_acceleration(h)->cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("quadratic recovers the acceleration") {
    const double a = 3.2;
    for (int i = 0; i < 3; ++i) {
      const double t = 0.37 + i * dt;
      h.push_back({t, Vector6d::Constant(0.5 * a * t * t)});
    }
    CHECK((estimate_acceleration(h).value() - Vector6d::Constant(a)).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("streaming estimator") {
  AccelerationEstimator est(20.0);
  const double dt = 1.0 / 5000.0;
  CHECK_FALSE(est.acceleration().has_value());
  const double a = -4.0;
  for (int i = 0; i < 2000; ++i) {
    const double t = i * dt;
    est.push(t, Vector6d::Constant(0.5 * a * t * t + 0.2 * t));
  }
  REQUIRE(est.ready());
  CHECK(est.raw_acceleration()->cwiseAbs().maxCoeff() == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(est.acceleration()->cwiseAbs().maxCoeff() == doctest::Approx(4.0).epsilon(1e-6));
  const double t_end = 1999 * dt;
  // First-order lag of 1/(2 pi fc) on a ramp.
  CHECK(est.velocity()->mean() == doctest::Approx(a * (t_end - 1.0 / (2 * std::numbers::pi * 20.0)) + 0.2).epsilon(1e-3));
  CHECK_THROWS_AS(est.push(0.0, Vector6d::Zero()), Error);
}

TEST_CASE("exo parameters and calibration files") {
  ExoParams p;
  p.back.mass = 9.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p.back.mass = 1.2;
  CHECK_NOTHROW(p.validate());
  p.thigh.com_fraction = 1.5;
  CHECK_THROWS_AS(p.validate(), Error);

  Calibration cal;
  cal.params.back.mass = 7.0;
  const auto j = to_json(cal);
  const Calibration back = calibration_from_json(j);
  CHECK(back.params.back.mass == 7.0);
  CHECK(to_json(back) == j);

  auto bad = j;
  bad["schema_version"] = 2;
  CHECK_THROWS_AS(calibration_from_json(bad), Error);
  bad = j;
  bad["friction"].erase("LK");
  try {
    calibration_from_json(bad);
    FAIL("expected a configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Configuration);
  }
}
