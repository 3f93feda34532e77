#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "motioncal/geometry.hpp"
#include "motioncal/handeye.hpp"
#include "motioncal/rng.hpp"

using namespace motioncal;

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

// Forward model: B sampled freely, A = X B X^-1.
std::vector<MotionPair> make_pairs(const RigidMotion& x,
                                   const std::vector<RigidMotion>& lidar,
                                   bool with_scale) {
  std::vector<MotionPair> pairs;
  for (std::size_t i = 0; i < lidar.size(); ++i) {
    const RigidMotion a = compose(compose(x, lidar[i]), x.inverse());
    MotionPair p;
    p.camera = ScaledMotion::from_rigid(a);
    if (!with_scale) p.camera.scale.reset();
    p.lidar = lidar[i];
    p.id = "m" + std::to_string(i);
    pairs.push_back(p);
  }
  return pairs;
}

std::vector<RigidMotion> mixed_axis_motions(Rng& rng, int n) {
  std::vector<RigidMotion> out;
  for (int i = 0; i < n; ++i) {
    AxisAngle aa;
    aa.axis = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
    aa.angle = rng.uniform(8, 25) * kDeg;
    RigidMotion m;
    m.rotation = Rotation::from_axis_angle(aa);
    m.translation = Eigen::Vector3d(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4),
                                    rng.uniform(-0.4, 0.4));
    out.push_back(m);
  }
  return out;
}

RigidMotion test_extrinsic() {
  RigidMotion x;
  x.rotation = Rotation::from_axis_angle(
      {Eigen::Vector3d(1, 2, 3).normalized(), 10 * kDeg});
  x.translation = Eigen::Vector3d(0.2, 0.05, 0.1);
  return x;
}

double frobenius_cost(const std::vector<MotionPair>& pairs, const Rotation& r) {
  double cost = 0.0;
  for (const auto& p : pairs) {
    cost += (p.camera.rotation.matrix() * r.matrix() -
             r.matrix() * p.lidar.rotation.matrix())
                .norm();
  }
  return cost;
}

}  // namespace

TEST_CASE("rotation solve returns identity when axes already agree") {
  std::vector<MotionPair> pairs;
  for (const auto& axis : {Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitZ()}) {
    MotionPair p;
    p.camera.rotation = Rotation::from_axis_angle({axis, 20 * kDeg});
    p.lidar.rotation = p.camera.rotation;
    pairs.push_back(p);
  }
  const auto r = solve_rotation_linear(pairs);
  REQUIRE(r.ok());
  CHECK(r.value().is_identity(1e-12));
}

TEST_CASE("rotation solve recovers a quarter turn from two axes") {
  const Rotation x = Rotation::about_z(90 * kDeg);
  std::vector<MotionPair> pairs;
  for (const auto& axis : {Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY()}) {
    MotionPair p;
    p.lidar.rotation = Rotation::from_axis_angle({axis, 15 * kDeg});
    p.camera.rotation = Rotation::from_axis_angle({x * axis, 15 * kDeg});
    pairs.push_back(p);
  }
  const auto r = solve_rotation_linear(pairs);
  REQUIRE(r.ok());
  CHECK(rotation_distance(r.value(), x) < 1e-12);
}

TEST_CASE("rotation solve rejects single axis motion sets") {
  std::vector<MotionPair> pairs;
  for (int i = 0; i < 5; ++i) {
    MotionPair p;
    p.lidar.rotation = Rotation::about_z((10 + i) * kDeg);
    p.camera.rotation = p.lidar.rotation;
    pairs.push_back(p);
  }
  CHECK(solve_rotation_linear(pairs).code() == ErrorCode::DegenerateAxes);
  CHECK(solve_rotation_linear({pairs[0]}).code() == ErrorCode::InsufficientPairs);
}

TEST_CASE("rotation refinement is a no-op at the truth") {
  Rng rng(2);
  const RigidMotion x = test_extrinsic();
  const auto pairs = make_pairs(x, mixed_axis_motions(rng, 6), false);
  const Rotation refined = refine_rotation(pairs, x.rotation);
  CHECK(rotation_distance(refined, x.rotation) < 1e-10);
}

TEST_CASE("rotation refinement pulls a perturbed start back to the truth") {
  Rng rng(3);
  const RigidMotion x = test_extrinsic();
  const auto pairs = make_pairs(x, mixed_axis_motions(rng, 8), false);
  const Rotation r0 =
      x.rotation * Rotation::from_axis_angle({Eigen::Vector3d(0, 1, 0), 2 * kDeg});
  const Rotation refined = refine_rotation(pairs, r0);
  CHECK(rotation_distance(refined, x.rotation) < 1e-8);
}

TEST_CASE("rotation refinement never increases the cost on noisy axes") {
  Rng rng(4);
  const RigidMotion x = test_extrinsic();
  auto pairs = make_pairs(x, mixed_axis_motions(rng, 10), false);
  for (auto& p : pairs) {
    const Rotation jitter = Rotation::exp(0.5 * kDeg *
                                          Eigen::Vector3d(rng.normal(), rng.normal(),
                                                          rng.normal()));
    p.camera.rotation = jitter * p.camera.rotation;
  }
  const Rotation r0 = solve_rotation_linear(pairs).value();
  const Rotation refined = refine_rotation(pairs, r0);
  CHECK(frobenius_cost(pairs, refined) <= frobenius_cost(pairs, r0) + 1e-12);
}

TEST_CASE("linear rotation is already the refinement fixed point when noiseless") {
  Rng rng(5);
  const RigidMotion x = test_extrinsic();
  const auto pairs = make_pairs(x, mixed_axis_motions(rng, 6), false);
  const Rotation linear = solve_rotation_linear(pairs).value();
  const Rotation refined = refine_rotation(pairs, linear);
  CHECK(rotation_distance(linear, refined) < 1e-9);
  CHECK(rotation_distance(linear, x.rotation) < 1e-9);
}

TEST_CASE("translation solve flags pure rotation pairs") {
  std::vector<MotionPair> pairs;
  for (const auto& axis : {Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                           Eigen::Vector3d::UnitZ()}) {
    MotionPair p;
    p.lidar.rotation = Rotation::from_axis_angle({axis, 20 * kDeg});
    p.camera.rotation = p.lidar.rotation;
    pairs.push_back(p);
  }
  const auto sol = solve_translation_scales(pairs, Rotation());
  REQUIRE(sol.ok());
  CHECK(sol.value().t.norm() < 1e-9);
  for (const bool reliable : sol.value().scale_reliable) CHECK(!reliable);
}

TEST_CASE("translation solve recovers offset and scales from mixed motions") {
  Rng rng(6);
  const RigidMotion x = test_extrinsic();
  const auto lidar = mixed_axis_motions(rng, 4);
  const auto pairs = make_pairs(x, lidar, false);
  const auto sol = solve_translation_scales(pairs, x.rotation);
  REQUIRE(sol.ok());
  CHECK((sol.value().t - x.translation).norm() < 1e-10);
  REQUIRE(sol.value().scales.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double truth =
        compose(compose(x, lidar[i]), x.inverse()).translation.norm();
    CHECK(sol.value().scales[i] == doctest::Approx(truth).epsilon(1e-10));
  }
}

TEST_CASE("translation solve reports rank deficiency for one-axis data") {
  Rng rng(7);
  const RigidMotion x = test_extrinsic();
  std::vector<RigidMotion> lidar;
  for (int i = 0; i < 2; ++i) {
    RigidMotion m;
    m.rotation = Rotation::about_z((12 + 3 * i) * kDeg);
    m.translation = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()) * 0.2;
    lidar.push_back(m);
  }
  const auto sol = solve_translation_scales(make_pairs(x, lidar, false), x.rotation);
  REQUIRE(!sol.ok());
  CHECK(sol.code() == ErrorCode::RankDeficient);
}

TEST_CASE("translation refinement fixes the truth and returns to it") {
  Rng rng(8);
  const RigidMotion x = test_extrinsic();
  const auto pairs = make_pairs(x, mixed_axis_motions(rng, 6), true);

  const Eigen::Vector3d at_truth =
      refine_translation(pairs, x.rotation, x.translation);
  CHECK((at_truth - x.translation).norm() < 1e-10);

  const Eigen::Vector3d from_offset = refine_translation(
      pairs, x.rotation, x.translation + Eigen::Vector3d(0.03, -0.02, 0.05));
  CHECK((from_offset - x.translation).norm() < 1e-9);
}

TEST_CASE("translation refinement shrugs off one corrupted pair") {
  Rng rng(9);
  const RigidMotion x = test_extrinsic();
  auto pairs = make_pairs(x, mixed_axis_motions(rng, 9), true);
  // 10 cm camera-translation error on one pair
  pairs[4].camera.scale = pairs[4].camera.scale.value() + 0.1;

  Eigen::MatrixXd lhs(3 * pairs.size(), 3);
  Eigen::VectorXd rhs(3 * pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    lhs.block<3, 3>(3 * i, 0) =
        pairs[i].camera.rotation.matrix() - Eigen::Matrix3d::Identity();
    rhs.segment<3>(3 * i) =
        x.rotation * pairs[i].lidar.translation -
        pairs[i].camera.scale.value() * pairs[i].camera.direction;
  }
  const Eigen::Vector3d least_squares =
      lhs.colPivHouseholderQr().solve(rhs);

  const Eigen::Vector3d robust =
      refine_translation(pairs, x.rotation, least_squares);
  CHECK((robust - x.translation).norm() < (least_squares - x.translation).norm());
  CHECK((robust - x.translation).norm() < 1e-6);
}

TEST_CASE("full calibration recovers the extrinsic in both modes") {
  Rng rng(10);
  const RigidMotion x = test_extrinsic();
  const auto lidar = mixed_axis_motions(rng, 10);

  const auto scaleless = calibrate(make_pairs(x, lidar, false),
                                   CalibrationMode::Scaleless);
  REQUIRE(scaleless.ok());
  CHECK(rotation_distance(scaleless.value().transform.rotation, x.rotation) < 1e-9);
  CHECK((scaleless.value().transform.translation - x.translation).norm() < 1e-8);
  for (std::size_t i = 0; i < lidar.size(); ++i) {
    const double truth =
        compose(compose(x, lidar[i]), x.inverse()).translation.norm();
    CHECK(scaleless.value().scales[i] == doctest::Approx(truth).epsilon(1e-9));
  }

  const auto scaled = calibrate(make_pairs(x, lidar, true),
                                CalibrationMode::Scaled);
  REQUIRE(scaled.ok());
  CHECK(rotation_distance(scaled.value().transform.rotation,
                          scaleless.value().transform.rotation) < 1e-8);
  CHECK((scaled.value().transform.translation -
         scaleless.value().transform.translation)
            .norm() < 1e-7);
  CHECK(scaled.value().rotation_residual < 1e-9);
  CHECK(scaled.value().translation_residual < 1e-9);
}

TEST_CASE("calibration propagates the too-few-pairs error") {
  Rng rng(11);
  const auto pairs = make_pairs(test_extrinsic(), mixed_axis_motions(rng, 1), false);
  CHECK(calibrate(pairs, CalibrationMode::Scaleless).code() ==
        ErrorCode::InsufficientPairs);
}

TEST_CASE("conjugating the lidar motions shifts the solution by the gauge") {
  Rng rng(12);
  const RigidMotion x = test_extrinsic();
  const auto lidar = mixed_axis_motions(rng, 8);

  RigidMotion g;
  g.rotation = Rotation::from_axis_angle({Eigen::Vector3d(0, 1, 1).normalized(),
                                          25 * kDeg});
  g.translation = Eigen::Vector3d(0.3, -0.1, 0.4);

  auto pairs = make_pairs(x, lidar, false);
  for (std::size_t i = 0; i < pairs.size(); ++i)
    pairs[i].lidar = compose(compose(g, lidar[i]), g.inverse());

  const auto sol = calibrate(pairs, CalibrationMode::Scaleless);
  REQUIRE(sol.ok());
  const RigidMotion expected = compose(x, g.inverse());
  CHECK(rotation_distance(sol.value().transform.rotation, expected.rotation) < 1e-8);
  CHECK((sol.value().transform.translation - expected.translation).norm() < 1e-8);
}

TEST_CASE("motion equation residuals vanish at the noiseless solution") {
  Rng rng(13);
  const RigidMotion x = test_extrinsic();
  const auto lidar = mixed_axis_motions(rng, 6);
  const auto sol = calibrate(make_pairs(x, lidar, false),
                             CalibrationMode::Scaleless);
  REQUIRE(sol.ok());
  const RigidMotion& est = sol.value().transform;
  for (std::size_t i = 0; i < lidar.size(); ++i) {
    const RigidMotion a = compose(compose(x, lidar[i]), x.inverse());
    const RigidMotion lhs = compose(a, est);
    const RigidMotion rhs = compose(est, lidar[i]);
    CHECK(rotation_distance(lhs.rotation, rhs.rotation) < 1e-9);
    CHECK((lhs.translation - rhs.translation).norm() < 1e-9);
  }
}

TEST_CASE("small-angle pairs are tolerated but not trusted") {
  Rng rng(14);
  const RigidMotion x = test_extrinsic();
  auto lidar = mixed_axis_motions(rng, 6);
  // one pair with barely any rotation and a noisy camera axis
  RigidMotion weak;
  weak.rotation = Rotation::about_x(0.1 * kDeg);
  weak.translation = Eigen::Vector3d(0.01, 0, 0);
  lidar.push_back(weak);

  auto pairs = make_pairs(x, lidar, false);
  auto& noisy = pairs.back();
  noisy.camera.rotation =
      Rotation::exp(Eigen::Vector3d(0.002, -0.001, 0.003)) * noisy.camera.rotation;

  const auto sol = calibrate(pairs, CalibrationMode::Scaleless);
  REQUIRE(sol.ok());
  CHECK(rotation_distance(sol.value().transform.rotation, x.rotation) < 1e-4);
}
