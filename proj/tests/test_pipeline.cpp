#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "motioncal/pipeline.hpp"
#include "motioncal/rng.hpp"
#include "motioncal/synthetic.hpp"

using namespace motioncal;

namespace {

RigidMotion test_extrinsic() {
  return RigidMotion(
      Rotation::from_axis_angle(AxisAngle{
          Eigen::Vector3d(1.0, 2.0, 3.0).normalized(), 10.0 * M_PI / 180.0}),
      Eigen::Vector3d(0.2, 0.05, 0.1));
}

SimulatedDataset pipeline_sim(const NoiseSpec& noise, std::uint64_t seed,
                              int n_horizontal = 2, int n_vertical = 2,
                              bool provide_motions = true) {
  SceneSpec spec;
  spec.density = 60.0;
  spec.seed = 13;
  const Scene scene = generate_scene(spec);
  TrajectorySpec traj;
  traj.n_horizontal = n_horizontal;
  traj.n_vertical = n_vertical;
  traj.seed = 4;
  const CameraModel cam = CameraModel::spherical(2048, 1024);
  SimulatedDataset sim =
      simulate_dataset(scene, traj, test_extrinsic(), cam, noise, seed);
  if (provide_motions) sim.data.lidar_motions = sim.oracle.lidar_motions;
  return sim;
}

bool contains(const std::vector<std::string>& haystack,
              const std::string& needle) {
  for (const std::string& s : haystack)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("noiseless scans calibrate to the sealed extrinsic") {
  SimulatedDataset sim = pipeline_sim(NoiseSpec{}, 31, 2, 2, false);
  CalibrationConfig config;
  config.seed = 7;

  const auto run = run_calibration(sim.data, config);
  REQUIRE(run.ok());
  const CalibrationReport& report = run.value();
  CHECK(report.status == PipelineStatus::Converged);
  CHECK(report.failure_reason.empty());

  const auto err = evaluate_extrinsic(report.extrinsic.transform,
                                      sim.oracle.true_extrinsic);
  CHECK(err.first * M_PI / 180.0 < 1e-6);
  CHECK(err.second < 1e-6);
  CHECK(report.extrinsic.scales.size() == sim.data.motion_count());

  REQUIRE(report.per_iteration.size() >= 2);
  CHECK(report.per_iteration.size() <= 6);  // init + at most 5 outer rounds
  CHECK(report.per_iteration[0].iteration == 0);
  CHECK(std::isnan(report.per_iteration[0].mean_angular_residual));
  CHECK(report.per_iteration[0].pair_count == sim.data.motion_count());
  for (std::size_t k = 1; k < report.per_iteration.size(); ++k) {
    CHECK(report.per_iteration[k].iteration == int(k));
    CHECK(std::isfinite(report.per_iteration[k].mean_angular_residual));
    if (k >= 2) {
      CHECK(report.per_iteration[k].mean_angular_residual <=
            report.per_iteration[k - 1].mean_angular_residual + 1e-9);
    }
  }

  const auto& last = report.per_iteration.back();
  const auto& prev = report.per_iteration[report.per_iteration.size() - 2];
  if (prev.iteration >= 1) {
    CHECK(rotation_distance(last.extrinsic.transform.rotation,
                            prev.extrinsic.transform.rotation) < 1e-8);
    CHECK((last.extrinsic.transform.translation -
           prev.extrinsic.transform.translation)
              .norm() < 1e-8);
  }
  CHECK(report.motion_diagnostics.size() == sim.data.motion_count());
}

TEST_CASE("provided lidar motions replace scan registration") {
  SimulatedDataset sim = pipeline_sim(NoiseSpec{}, 32);
  CalibrationConfig config;
  config.seed = 9;

  const auto run = run_calibration(sim.data, config);
  REQUIRE(run.ok());
  CHECK(run.value().status == PipelineStatus::Converged);
  const auto err = evaluate_extrinsic(run.value().extrinsic.transform,
                                      sim.oracle.true_extrinsic);
  CHECK(err.first * M_PI / 180.0 < 1e-7);
  CHECK(err.second < 1e-7);
}

TEST_CASE("motion pair estimation matches the sealed camera odometry") {
  SimulatedDataset sim = pipeline_sim(NoiseSpec{}, 33);
  sim.data.scans.clear();

  std::vector<std::string> warnings;
  const auto pairs = estimate_motion_pairs(sim.data, {}, &warnings);
  REQUIRE(pairs.ok());
  CHECK(warnings.empty());
  REQUIRE(pairs.value().size() == sim.data.motion_count());

  for (std::size_t i = 0; i < pairs.value().size(); ++i) {
    const MotionPair& pair = pairs.value()[i];
    CHECK(pair.id == sim.data.motion_ids[i]);
    CHECK(!pair.camera.scale.has_value());
    const RigidMotion& a = sim.oracle.camera_motions[i];
    CHECK(rotation_distance(pair.camera.rotation, a.rotation) < 1e-6);
    CHECK((pair.camera.direction - a.translation.normalized()).norm() < 1e-6);
    CHECK(pair.lidar.rotation.matrix() ==
          sim.oracle.lidar_motions[i].rotation.matrix());
    CHECK((pair.lidar.translation - sim.oracle.lidar_motions[i].translation)
              .norm() == 0.0);
  }
}

TEST_CASE("a motion with broken matches is dropped with a warning") {
  SimulatedDataset sim = pipeline_sim(NoiseSpec{}, 34);
  sim.data.scans.clear();
  sim.data.matches[1].resize(5);

  std::vector<std::string> warnings;
  const auto pairs = estimate_motion_pairs(sim.data, {}, &warnings);
  REQUIRE(pairs.ok());
  CHECK(pairs.value().size() == sim.data.motion_count() - 1);
  CHECK(contains(warnings, "m001"));
  for (const MotionPair& pair : pairs.value()) CHECK(pair.id != "m001");
}

TEST_CASE("pixel noise still improves on the scaleless initialization") {
  NoiseSpec noise;
  noise.pixel_sigma = 0.5;
  SimulatedDataset sim = pipeline_sim(noise, 35);
  CalibrationConfig config;
  config.seed = 3;

  const auto run = run_calibration(sim.data, config);
  REQUIRE(run.ok());
  const CalibrationReport& report = run.value();
  CHECK(report.status != PipelineStatus::Failed);

  const auto init = evaluate_extrinsic(
      report.per_iteration[0].extrinsic.transform, sim.oracle.true_extrinsic);
  const auto fin = evaluate_extrinsic(report.extrinsic.transform,
                                      sim.oracle.true_extrinsic);
  CHECK(fin.first < 1.0);
  CHECK(fin.second < init.second);
}

TEST_CASE("iteration cap reports the lowest-residual scaled iterate") {
  NoiseSpec noise;
  noise.pixel_sigma = 0.7;
  SimulatedDataset sim = pipeline_sim(noise, 36);
  CalibrationConfig config;
  config.seed = 5;
  config.max_outer_iterations = 4;
  config.rotation_eps = 0.0;
  config.translation_eps = 0.0;

  const auto run = run_calibration(sim.data, config);
  REQUIRE(run.ok());
  const CalibrationReport& report = run.value();
  REQUIRE(report.status == PipelineStatus::MaxIterations);

  double best = std::numeric_limits<double>::infinity();
  const IterationRecord* winner = nullptr;
  for (const IterationRecord& rec : report.per_iteration) {
    if (rec.iteration == 0) continue;
    if (rec.extrinsic.translation_residual < best) {
      best = rec.extrinsic.translation_residual;
      winner = &rec;
    }
  }
  REQUIRE(winner != nullptr);
  CHECK(report.extrinsic.translation_residual == best);
  CHECK(report.extrinsic.transform.rotation.matrix() ==
        winner->extrinsic.transform.rotation.matrix());
  CHECK((report.extrinsic.transform.translation -
         winner->extrinsic.transform.translation)
            .norm() == 0.0);
}

TEST_CASE("yaw-only trajectories fail initialization") {
  SimulatedDataset sim = pipeline_sim(NoiseSpec{}, 37, 3, 0);

  const auto run = run_calibration(sim.data, {});
  REQUIRE(!run.ok());
  CHECK(run.error().code == ErrorCode::InitializationFailed);
  CHECK(!run.error().message.empty());
}

TEST_CASE("dataset validation rejects inconsistent inputs") {
  SimulatedDataset sim = pipeline_sim(NoiseSpec{}, 38);

  MotionDataset missing_tracker = sim.data;
  missing_tracker.trackers.pop_back();
  auto run = run_calibration(missing_tracker, {});
  REQUIRE(!run.ok());
  CHECK(run.error().code == ErrorCode::InvalidArgument);

  MotionDataset short_motions = sim.data;
  short_motions.lidar_motions.pop_back();
  run = run_calibration(short_motions, {});
  REQUIRE(!run.ok());
  CHECK(run.error().code == ErrorCode::InvalidArgument);

  MotionDataset short_scans = sim.data;
  short_scans.lidar_motions.clear();
  short_scans.scans.pop_back();
  run = run_calibration(short_scans, {});
  REQUIRE(!run.ok());
  CHECK(run.error().code == ErrorCode::InvalidArgument);

  MotionDataset too_small = sim.data;
  too_small.matches.resize(1);
  too_small.trackers.resize(1);
  too_small.lidar_motions.resize(1);
  too_small.scans.resize(2);
  run = run_calibration(too_small, {});
  REQUIRE(!run.ok());
  CHECK(run.error().code == ErrorCode::InitializationFailed);
}

TEST_CASE("flagged motions can be excluded from the solve") {
  SimulatedDataset sim = pipeline_sim(NoiseSpec{}, 39, 3, 3);
  CalibrationConfig config;
  config.max_outer_iterations = 0;
  config.drop_flagged_pairs = true;
  config.advisor.weak_rotation_threshold = 1e-9;
  config.advisor.large_baseline_threshold = 0.33;

  const auto run = run_calibration(sim.data, config);
  REQUIRE(run.ok());
  const CalibrationReport& report = run.value();
  REQUIRE(report.per_iteration.size() == 1);
  CHECK(report.per_iteration[0].pair_count == 5);
  CHECK(contains(report.warnings, "m002: excluded by motion advisor"));

  config.advisor.large_baseline_threshold = 1e-6;
  const auto all_flagged = run_calibration(sim.data, config);
  REQUIRE(all_flagged.ok());
  CHECK(all_flagged.value().per_iteration[0].pair_count ==
        sim.data.motion_count());
  CHECK(contains(all_flagged.value().warnings, "keeping all"));
}

TEST_CASE("advisor gain equals the rotation propagation factor") {
  auto make_pair = [](const Rotation& rot, const Eigen::Vector3d& cam_t,
                      const Eigen::Vector3d& lidar_t) {
    MotionPair pair;
    pair.camera = ScaledMotion::from_rigid(RigidMotion(rot, cam_t));
    pair.lidar = RigidMotion(rot, lidar_t);
    pair.id = "p";
    return pair;
  };

  const auto idle = motion_advisor(
      {make_pair(Rotation(), Eigen::Vector3d::Zero(),
                 Eigen::Vector3d(0.1, 0.0, 0.0))});
  REQUIRE(idle.size() == 1);
  CHECK(idle[0].rotation_angle == 0.0);
  CHECK(idle[0].propagation_gain < 1e-12);
  CHECK(idle[0].weak_rotation);
  CHECK(!idle[0].large_baseline);

  const auto half_turn = motion_advisor(
      {make_pair(Rotation::about_z(M_PI), Eigen::Vector3d(1.0, 0.0, 0.0),
                 Eigen::Vector3d::Zero())});
  CHECK(std::abs(half_turn[0].propagation_gain - 2.0) < 1e-12);
  CHECK(!half_turn[0].weak_rotation);
  CHECK(half_turn[0].large_baseline);
  CHECK(half_turn[0].translation_magnitude == doctest::Approx(1.0));

  const auto quarter = motion_advisor(
      {make_pair(Rotation::about_z(M_PI / 2), Eigen::Vector3d(0.0, 0.2, 0.0),
                 Eigen::Vector3d::Zero())});
  CHECK(std::abs(quarter[0].propagation_gain - std::sqrt(2.0)) < 1e-12);

  Rng rng(404);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    if (axis.norm() < 1e-6) continue;
    const double angle = rng.uniform(0.0, M_PI);
    const Rotation rot =
        Rotation::from_axis_angle(AxisAngle{axis.normalized(), angle});
    const auto diag = motion_advisor(
        {make_pair(rot, Eigen::Vector3d(0.1, 0.0, 0.0),
                   Eigen::Vector3d::Zero())});
    CHECK(std::abs(diag[0].propagation_gain - 2.0 * std::sin(angle / 2.0)) <
          1e-12);
  }

  AdvisorParams params;
  const auto weak = motion_advisor(
      {make_pair(Rotation::about_z(4.9 * M_PI / 180.0),
                 Eigen::Vector3d(0.1, 0.0, 0.0), Eigen::Vector3d::Zero())},
      params);
  CHECK(weak[0].weak_rotation);
  const auto strong = motion_advisor(
      {make_pair(Rotation::about_z(5.1 * M_PI / 180.0),
                 Eigen::Vector3d(0.1, 0.0, 0.0), Eigen::Vector3d::Zero())},
      params);
  CHECK(!strong[0].weak_rotation);

  MotionPair unscaled;
  unscaled.camera.rotation = Rotation::about_x(0.3);
  unscaled.camera.scale.reset();
  unscaled.lidar = RigidMotion(Rotation(), Eigen::Vector3d(0.0, 0.6, 0.0));
  const auto fallback = motion_advisor({unscaled});
  CHECK(fallback[0].translation_magnitude == doctest::Approx(0.6));
  CHECK(fallback[0].large_baseline);
}

TEST_CASE("projection error prediction follows the closed form") {
  const Eigen::Vector3d v = Eigen::Vector3d(0.2, -0.1, 1.0).normalized();
  const Eigen::Vector3d a(0.4, 0.3, 0.2);

  const auto exact = predicted_projection_error(a, a, v, 1.7, 1.7);
  REQUIRE(exact.ok());
  CHECK(exact.value() == 0.0);

  const Eigen::Vector3d along = 0.8 * v;
  const auto parallel = predicted_projection_error(along, along, v, 2.0, 1.4);
  REQUIRE(parallel.ok());
  CHECK(parallel.value() < 1e-12);

  Rng rng(808);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::Vector3d dir(rng.normal(), rng.normal(), rng.normal());
    if (dir.norm() < 1e-6) continue;
    dir.normalize();
    const Eigen::Vector3d point(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                                rng.uniform(-2.0, 2.0));
    const double alpha = rng.uniform(0.5, 4.0);
    const double beta = rng.uniform(0.5, 4.0);
    const Eigen::Vector3d true_dir = beta * dir - point;
    const Eigen::Vector3d est_dir = alpha * dir - point;
    if (true_dir.norm() < 0.1 || est_dir.norm() < 0.1) continue;

    const auto err = predicted_projection_error(point, point, dir, alpha, beta);
    REQUIRE(err.ok());
    const double closed = std::abs(alpha - beta) * point.cross(dir).norm() /
                          (true_dir.norm() * est_dir.norm());
    CHECK(std::abs(err.value() - closed) < 1e-12);
  }

  const auto degenerate =
      predicted_projection_error(1.3 * v, a, v, 2.0, 1.3 * v.norm());
  REQUIRE(!degenerate.ok());
  CHECK(degenerate.error().code == ErrorCode::DegenerateGeometry);
}

TEST_CASE("projection error grows with the estimate offset") {
  const Eigen::Vector3d v = Eigen::Vector3d(0.1, 0.3, 1.0).normalized();
  const Eigen::Vector3d a(0.5, -0.2, 0.3);
  const double alpha = 2.2;
  const double beta = 2.2;

  const Eigen::Vector3d true_dir = beta * v - a;
  Eigen::Vector3d off = true_dir.cross(Eigen::Vector3d::UnitX());
  REQUIRE(off.norm() > 1e-6);
  off.normalize();

  double last = -1.0;
  for (int k = 0; k <= 10; ++k) {
    const double s = 0.02 * k;
    const Eigen::Vector3d a_est = alpha * v - (true_dir + s * off);
    const auto err = predicted_projection_error(a, a_est, v, alpha, beta);
    REQUIRE(err.ok());
    CHECK(err.value() >= last - 1e-12);
    last = err.value();
  }
  CHECK(last > 0.01);
}
