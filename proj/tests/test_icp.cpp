#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "motioncal/geometry.hpp"
#include "motioncal/icp.hpp"
#include "motioncal/rng.hpp"
#include "motioncal/synthetic.hpp"

using namespace motioncal;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = kPi / 180.0;

// Spherical raycast of the scene from a sensor pose; points and normals in
// the sensor frame, sensor at the cloud origin.
PointCloud render_scan(const Scene& scene, const RigidMotion& pose,
                       int n_az = 240, int n_el = 60, bool keep_normals = true) {
  PointCloud cloud;
  const RigidMotion inv = pose.inverse();
  const double limit = 75 * kDeg;
  for (int e = 0; e < n_el; ++e) {
    const double el = -limit + 2 * limit * (e + 0.5) / n_el;
    for (int a = 0; a < n_az; ++a) {
      const double az = 2 * kPi * (a + 0.5) / n_az;
      const Eigen::Vector3d dir(std::cos(el) * std::cos(az),
                                std::cos(el) * std::sin(az), std::sin(el));
      const auto hit = intersect_scene(scene, pose.translation,
                                       pose.rotation * dir);
      if (!hit) continue;
      cloud.points.push_back(inv.apply(hit->point));
      if (keep_normals) cloud.normals.push_back(inv.rotation * hit->normal);
    }
  }
  cloud.sensor_origin.setZero();
  return cloud;
}

Scene default_scene() {
  SceneSpec spec;
  spec.density = 30.0;
  spec.seed = 5;
  return generate_scene(spec);
}

void check_close(const RigidMotion& got, const RigidMotion& want,
                 double rot_tol_deg, double trans_tol_m) {
  CHECK(rotation_distance(got.rotation, want.rotation) / kDeg < rot_tol_deg);
  CHECK((got.translation - want.translation).norm() < trans_tol_m);
}

}  // namespace

TEST_CASE("normals on a flat patch point back at the sensor") {
  PointCloud cloud;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      cloud.points.emplace_back(0.1 * i, 0.1 * j, 0.0);
    }
  }
  cloud.sensor_origin = Eigen::Vector3d(1.0, 1.0, 2.0);
  const PointCloud with = estimate_normals(cloud);
  REQUIRE(with.has_normals());
  for (const auto& n : with.normals) {
    CHECK((n - Eigen::Vector3d(0, 0, 1)).norm() < 1e-9);
  }
}

TEST_CASE("normals on a sphere are radial toward the center") {
  PointCloud cloud;
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    Eigen::Vector3d p(rng.normal(), rng.normal(), rng.normal());
    cloud.points.push_back(p.normalized());
  }
  cloud.sensor_origin.setZero();
  const PointCloud with = estimate_normals(cloud);

  // ten-neighbor patches span ~8 degrees of arc here, so a few degrees of
  // sampling tilt is inherent; orientation must never flip outward
  std::vector<double> errs;
  for (std::size_t i = 0; i < with.points.size(); ++i) {
    if (with.normals[i].isZero()) continue;
    const double cosine = with.normals[i].dot(-with.points[i].normalized());
    CHECK(cosine > 0.0);
    errs.push_back(std::acos(std::clamp(cosine, -1.0, 1.0)) / kDeg);
  }
  REQUIRE(errs.size() > 1900);
  std::sort(errs.begin(), errs.end());
  CHECK(errs[errs.size() / 2] < 2.0);
  CHECK(errs[static_cast<std::size_t>(0.95 * errs.size())] < 5.0);
}

TEST_CASE("estimated room normals match the analytic wall normals") {
  const Scene scene = default_scene();
  PointCloud bare;
  bare.points = scene.cloud.points;
  bare.sensor_origin.setZero();
  const PointCloud with = estimate_normals(bare);
  int good = 0, counted = 0;
  for (std::size_t i = 0; i < with.points.size(); ++i) {
    if (with.normals[i].isZero()) continue;
    ++counted;
    const double cosine = with.normals[i].dot(scene.cloud.normals[i]);
    if (std::acos(std::clamp(cosine, -1.0, 1.0)) < 2 * kDeg) ++good;
  }
  REQUIRE(counted > 0);
  CHECK(good >= static_cast<int>(0.99 * counted));
}

TEST_CASE("self alignment returns the identity") {
  const Scene scene = default_scene();
  const PointCloud scan = render_scan(scene, RigidMotion::identity());
  const auto res = icp_align(scan, scan, RigidMotion::identity(), IcpParams{});
  REQUIRE(res.ok());
  CHECK(res.value().motion.rotation.is_identity(1e-9));
  CHECK(res.value().motion.translation.norm() < 1e-9);
  CHECK(res.value().rms_residual < 1e-9);
  CHECK(res.value().inlier_fraction > 0.99);
}

TEST_CASE("a yaw plus slide between scans is recovered") {
  const Scene scene = default_scene();
  RigidMotion pose2;
  pose2.rotation = Rotation::about_z(5 * kDeg);
  pose2.translation = Eigen::Vector3d(0.1, 0, 0);

  const PointCloud target = render_scan(scene, RigidMotion::identity());
  const PointCloud source = render_scan(scene, pose2);
  const auto res = icp_align(source, target, RigidMotion::identity(), IcpParams{});
  REQUIRE(res.ok());
  check_close(res.value().motion, pose2, 0.05, 0.002);
}

TEST_CASE("alignment works without precomputed normals") {
  const Scene scene = default_scene();
  RigidMotion pose2;
  pose2.rotation = Rotation::about_z(3 * kDeg);
  pose2.translation = Eigen::Vector3d(0.05, -0.08, 0.02);

  const PointCloud target =
      render_scan(scene, RigidMotion::identity(), 240, 60, false);
  const PointCloud source = render_scan(scene, pose2, 240, 60, false);
  const auto res = icp_align(source, target, RigidMotion::identity(), IcpParams{});
  REQUIRE(res.ok());
  check_close(res.value().motion, pose2, 0.05, 0.002);
}

TEST_CASE("disjoint patches report no overlap") {
  PointCloud a, b;
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 30; ++j) {
      a.points.emplace_back(1.0 + 0.03 * i, 0.03 * j, 1.0);
      b.points.emplace_back(101.0 + 0.03 * i, 0.03 * j, 1.0);
    }
  }
  a.sensor_origin.setZero();
  b.sensor_origin = Eigen::Vector3d(100, 0, 0);
  const auto res = icp_align(a, b, RigidMotion::identity(), IcpParams{});
  REQUIRE(!res.ok());
  CHECK(res.code() == ErrorCode::NoOverlap);
}

TEST_CASE("forward and reverse alignments cancel") {
  const Scene scene = default_scene();
  RigidMotion pose2;
  pose2.rotation = Rotation::from_axis_angle(
      {Eigen::Vector3d(0.1, 0.2, 1).normalized(), 6 * kDeg});
  pose2.translation = Eigen::Vector3d(0.12, -0.05, 0.03);

  const PointCloud s1 = render_scan(scene, RigidMotion::identity());
  const PointCloud s2 = render_scan(scene, pose2);
  const auto fwd = icp_align(s2, s1, RigidMotion::identity(), IcpParams{});
  const auto rev = icp_align(s1, s2, RigidMotion::identity(), IcpParams{});
  REQUIRE(fwd.ok());
  REQUIRE(rev.ok());
  const RigidMotion loop = compose(fwd.value().motion, rev.value().motion);
  check_close(loop, RigidMotion::identity(), 0.05, 0.002);
}

TEST_CASE("residuals are non increasing within one threshold level") {
  const Scene scene = default_scene();
  RigidMotion pose2;
  pose2.rotation = Rotation::about_z(4 * kDeg);
  pose2.translation = Eigen::Vector3d(0.08, 0.02, 0);

  const PointCloud target = render_scan(scene, RigidMotion::identity());
  const PointCloud source = render_scan(scene, pose2);

  IcpParams params;
  params.initial_reject_distance = 0.3;
  params.final_reject_distance = 0.3;  // single level
  std::vector<double> trace;
  const auto res = icp_align(source, target, RigidMotion::identity(), params,
                             &trace);
  REQUIRE(res.ok());
  REQUIRE(trace.size() >= 2);
  for (std::size_t i = 1; i < trace.size(); ++i) {
    CHECK(trace[i] <= trace[i - 1] + 1e-12);
  }
}

TEST_CASE("rigidly moving both scans conjugates the estimate") {
  const Scene scene = default_scene();
  RigidMotion pose2;
  pose2.rotation = Rotation::about_z(5 * kDeg);
  pose2.translation = Eigen::Vector3d(0.1, 0, 0);

  const PointCloud s1 = render_scan(scene, RigidMotion::identity());
  const PointCloud s2 = render_scan(scene, pose2);
  const auto base = icp_align(s2, s1, RigidMotion::identity(), IcpParams{});
  REQUIRE(base.ok());

  RigidMotion g;
  g.rotation = Rotation::from_axis_angle(
      {Eigen::Vector3d(1, -1, 2).normalized(), 40 * kDeg});
  g.translation = Eigen::Vector3d(3, -2, 1);

  const auto shift = [&](const PointCloud& c) {
    PointCloud out = c;
    for (auto& p : out.points) p = g.apply(p);
    for (auto& n : out.normals) n = g.rotation * n;
    out.sensor_origin = g.apply(c.sensor_origin);
    return out;
  };
  const RigidMotion init = compose(compose(g, RigidMotion::identity()), g.inverse());
  const auto moved = icp_align(shift(s2), shift(s1), init, IcpParams{});
  REQUIRE(moved.ok());
  const RigidMotion expected = compose(compose(g, base.value().motion), g.inverse());
  CHECK(rotation_distance(moved.value().motion.rotation, expected.rotation) < 1e-6);
  CHECK((moved.value().motion.translation - expected.translation).norm() < 1e-6);
}

TEST_CASE("odometry chain over three stations") {
  const Scene scene = default_scene();
  std::vector<RigidMotion> poses(3, RigidMotion::identity());
  poses[1].rotation = Rotation::about_z(6 * kDeg);
  poses[1].translation = Eigen::Vector3d(0.1, 0.05, 0);
  poses[2].rotation = Rotation::from_axis_angle(
      {Eigen::Vector3d(0, 0.15, 1).normalized(), 10 * kDeg});
  poses[2].translation = Eigen::Vector3d(-0.05, 0.15, 0.02);

  std::vector<PointCloud> scans;
  for (const auto& p : poses) scans.push_back(render_scan(scene, p));
  const auto chain = odometry_chain(scans, IcpParams{});
  REQUIRE(chain.ok());
  REQUIRE(chain.value().size() == 2);
  for (int i = 0; i < 2; ++i) {
    const RigidMotion truth = compose(poses[i + 1].inverse(), poses[i]);
    check_close(chain.value()[i], truth, 0.05, 0.002);
  }
}

TEST_CASE("odometry chain edge cases") {
  const Scene scene = default_scene();
  const PointCloud scan = render_scan(scene, RigidMotion::identity());

  const auto twin = odometry_chain({scan, scan}, IcpParams{});
  REQUIRE(twin.ok());
  REQUIRE(twin.value().size() == 1);
  CHECK(twin.value()[0].rotation.is_identity(1e-9));
  CHECK(twin.value()[0].translation.norm() < 1e-9);

  CHECK(odometry_chain({scan}, IcpParams{}).code() ==
        ErrorCode::InsufficientScans);
}
