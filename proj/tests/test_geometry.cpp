#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "motioncal/geometry.hpp"
#include "motioncal/rng.hpp"

using namespace motioncal;

namespace {

constexpr double kPi = 3.14159265358979323846;

RigidMotion random_motion(Rng& rng) {
  RigidMotion m;
  m.rotation = Rotation::random(rng);
  m.translation =
      Eigen::Vector3d(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
  return m;
}

}  // namespace

TEST_CASE("compose with identity and inverse") {
  Rng rng(42);
  for (int i = 0; i < 20; ++i) {
    const RigidMotion m = random_motion(rng);
    const RigidMotion left = compose(RigidMotion::identity(), m);
    const RigidMotion right = compose(m, RigidMotion::identity());
    CHECK(rotation_distance(left.rotation, m.rotation) < 1e-12);
    CHECK((left.translation - m.translation).norm() < 1e-12);
    CHECK(rotation_distance(right.rotation, m.rotation) < 1e-12);
    CHECK((right.translation - m.translation).norm() < 1e-12);

    const RigidMotion cancel = compose(m, m.inverse());
    CHECK(cancel.rotation.is_identity(1e-12));
    CHECK(cancel.translation.norm() < 1e-12);
  }
}

TEST_CASE("compose of two quarter turns with unit offsets") {
  RigidMotion m;
  m.rotation = Rotation::about_z(kPi / 2);
  m.translation = Eigen::Vector3d(1, 0, 0);

  const RigidMotion mm = compose(m, m);
  CHECK(rotation_distance(mm.rotation, Rotation::about_z(kPi)) < 1e-12);
  CHECK((mm.translation - Eigen::Vector3d(1, 1, 0)).norm() < 1e-12);
}

TEST_CASE("compose applies its second argument first") {
  RigidMotion rot;
  rot.rotation = Rotation::about_z(kPi / 2);
  RigidMotion shift;
  shift.translation = Eigen::Vector3d(1, 0, 0);

  // rotate-then-shift vs shift-then-rotate disagree on where the origin lands
  const RigidMotion shift_after = compose(shift, rot);
  const RigidMotion rot_after = compose(rot, shift);
  CHECK((shift_after.apply(Eigen::Vector3d::Zero()) - Eigen::Vector3d(1, 0, 0))
            .norm() < 1e-12);
  CHECK((rot_after.apply(Eigen::Vector3d::Zero()) - Eigen::Vector3d(0, 1, 0))
            .norm() < 1e-12);
}

TEST_CASE("compose is associative over random triples") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const RigidMotion a = random_motion(rng);
    const RigidMotion b = random_motion(rng);
    const RigidMotion c = random_motion(rng);
    const RigidMotion left = compose(compose(a, b), c);
    const RigidMotion right = compose(a, compose(b, c));
    CHECK(rotation_distance(left.rotation, right.rotation) < 1e-9);
    CHECK((left.translation - right.translation).norm() < 1e-9);
  }
}

TEST_CASE("inverse is two sided") {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const RigidMotion m = random_motion(rng);
    const RigidMotion a = compose(m.inverse(), m);
    const RigidMotion b = compose(m, m.inverse());
    CHECK(a.rotation.is_identity(1e-12));
    CHECK(a.translation.norm() < 1e-12);
    CHECK(b.rotation.is_identity(1e-12));
    CHECK(b.translation.norm() < 1e-12);
  }
}

TEST_CASE("long compose chains stay orthonormal") {
  Rng rng(5);
  RigidMotion m = RigidMotion::identity();
  for (int i = 0; i < 2000; ++i) m = compose(m, random_motion(rng));
  const Eigen::Matrix3d r = m.rotation.matrix();
  CHECK((r * r.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
  CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("axis angle of a quarter turn about z") {
  const auto aa = Rotation::about_z(kPi / 2).axis_angle();
  REQUIRE(aa.ok());
  CHECK((aa.value().axis - Eigen::Vector3d(0, 0, 1)).norm() < 1e-12);
  CHECK(aa.value().angle == doctest::Approx(kPi / 2).epsilon(1e-12));
}

TEST_CASE("axis angle rejects near identity rotations") {
  const auto aa = Rotation().axis_angle();
  REQUIRE(!aa.ok());
  CHECK(aa.code() == ErrorCode::NearIdentity);

  const auto tiny = Rotation::about_x(1e-9).axis_angle();
  REQUIRE(!tiny.ok());
  CHECK(tiny.code() == ErrorCode::NearIdentity);
}

TEST_CASE("axis angle round trips over random rotations") {
  Rng rng(1000);
  for (int i = 0; i < 1000; ++i) {
    const Rotation r = Rotation::random(rng);
    const auto aa = r.axis_angle();
    if (!aa.ok()) continue;
    const Rotation back = Rotation::from_axis_angle(aa.value());
    CHECK(rotation_distance(r, back) < 1e-9);
  }
}

TEST_CASE("conjugation rotates the axis") {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const Rotation r = Rotation::random(rng);
    AxisAngle k;
    k.axis = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
    k.angle = rng.uniform(0.01, 3.0);

    const Rotation conj = r * Rotation::from_axis_angle(k) * r.inverse();
    const auto aa = conj.axis_angle();
    REQUIRE(aa.ok());
    CHECK((aa.value().axis - r * k.axis).norm() < 1e-9);
    CHECK(aa.value().angle == doctest::Approx(k.angle).epsilon(1e-9));
  }
}

TEST_CASE("exp and log are mutual inverses") {
  Rng rng(21);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d w(rng.uniform(-3, 3), rng.uniform(-3, 3),
                            rng.uniform(-3, 3));
    if (w.norm() >= kPi) continue;
    CHECK((Rotation::exp(w).log() - w).norm() < 1e-9);

    const Rotation r = Rotation::random(rng);
    CHECK(rotation_distance(Rotation::exp(r.log()), r) < 1e-9);
  }
}

TEST_CASE("skew matches the cross product") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector3d a(rng.normal(), rng.normal(), rng.normal());
    const Eigen::Vector3d b(rng.normal(), rng.normal(), rng.normal());
    CHECK((skew(a) * b - a.cross(b)).norm() < 1e-12);
  }
}

TEST_CASE("rotation distance") {
  CHECK(rotation_distance(Rotation(), Rotation()) == doctest::Approx(0.0));
  CHECK(rotation_distance(Rotation::about_z(0.3), Rotation::about_z(0.5)) ==
        doctest::Approx(0.2).epsilon(1e-12));
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const Rotation a = Rotation::random(rng);
    const Rotation b = Rotation::random(rng);
    CHECK(rotation_distance(a, b) == doctest::Approx(rotation_distance(b, a)));
    CHECK(rotation_distance(a, b) <= kPi + 1e-12);
  }
}

TEST_CASE("rigid motion matrix agrees with apply") {
  Rng rng(33);
  for (int i = 0; i < 50; ++i) {
    const RigidMotion m = random_motion(rng);
    const Eigen::Vector3d p(rng.normal(), rng.normal(), rng.normal());
    const Eigen::Vector4d ph(p.x(), p.y(), p.z(), 1.0);
    CHECK(((m.matrix() * ph).head<3>() - m.apply(p)).norm() < 1e-12);
  }
}

TEST_CASE("scaled motion round trips through rigid form") {
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    const RigidMotion m = random_motion(rng);
    if (m.translation.norm() < 1e-9) continue;
    const ScaledMotion s = ScaledMotion::from_rigid(m);
    CHECK(s.direction.norm() == doctest::Approx(1.0).epsilon(1e-9));
    REQUIRE(s.scale.has_value());
    CHECK(s.scale.value() == doctest::Approx(m.translation.norm()).epsilon(1e-12));
    const RigidMotion back = s.to_rigid();
    CHECK(rotation_distance(back.rotation, m.rotation) < 1e-12);
    CHECK((back.translation - m.translation).norm() < 1e-12);
  }
}

TEST_CASE("quaternion and matrix constructors agree") {
  Rng rng(29);
  for (int i = 0; i < 100; ++i) {
    const Rotation r = Rotation::random(rng);
    CHECK(rotation_distance(Rotation::from_matrix(r.matrix()), r) < 1e-12);
    CHECK(rotation_distance(Rotation::from_quaternion(r.quaternion()), r) < 1e-12);
  }
}
