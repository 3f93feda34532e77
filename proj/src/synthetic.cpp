#include "motioncal/synthetic.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "motioncal/epipolar.hpp"
#include "motioncal/parallel.hpp"
#include "motioncal/rng.hpp"

namespace motioncal {

namespace {

SurfaceRect make_rect(const Eigen::Vector3d& origin, const Eigen::Vector3d& eu,
                      const Eigen::Vector3d& ev, const Eigen::Vector3d& n) {
  return SurfaceRect{origin, eu, ev, n.normalized()};
}

std::vector<SurfaceRect> box_room_surfaces(const Eigen::Vector3d& dims,
                                           bool with_step) {
  const double hx = dims.x() / 2, hy = dims.y() / 2, hz = dims.z() / 2;
  const Eigen::Vector3d ex(1, 0, 0), ey(0, 1, 0), ez(0, 0, 1);
  std::vector<SurfaceRect> s;
  s.push_back(make_rect({-hx, -hy, -hz}, dims.x() * ex, dims.y() * ey, ez));
  s.push_back(make_rect({-hx, -hy, hz}, dims.x() * ex, dims.y() * ey, -ez));
  s.push_back(make_rect({-hx, -hy, -hz}, dims.y() * ey, dims.z() * ez, ex));
  s.push_back(make_rect({-hx, -hy, -hz}, dims.x() * ex, dims.z() * ez, ey));
  s.push_back(make_rect({-hx, hy, -hz}, dims.x() * ex, dims.z() * ez, -ey));
  if (!with_step) {
    s.push_back(make_rect({hx, -hy, -hz}, dims.y() * ey, dims.z() * ez, -ex));
    return s;
  }
  // The lower half of the +x wall is recessed outward, leaving a horizontal
  // step face at mid height that only near-level sensors see from below.
  const double depth = 0.3;
  s.push_back(make_rect({hx, -hy, 0}, dims.y() * ey, hz * ez, -ex));
  s.push_back(make_rect({hx + depth, -hy, -hz}, dims.y() * ey, hz * ez, -ex));
  s.push_back(make_rect({hx, -hy, 0}, depth * ex, dims.y() * ey, -ez));
  s.push_back(make_rect({hx, -hy, -hz}, depth * ex, hz * ez, ey));
  s.push_back(make_rect({hx, hy, -hz}, depth * ex, hz * ez, -ey));
  return s;
}

std::string hex16(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

uint64_t fold(uint64_t h, double v) {
  return mix64(h, std::bit_cast<uint64_t>(v));
}
uint64_t fold(uint64_t h, uint64_t v) { return mix64(h, v); }

double to_unit_open(uint64_t h) {
  // (0,1): never exactly 0, safe under log().
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
  Scene scene;
  scene.dimensions = spec.dimensions;
  scene.surfaces = box_room_surfaces(
      spec.dimensions, spec.kind == SceneSpec::Kind::BoxRoomWithStep);

  Rng root(spec.seed);
  for (std::size_t si = 0; si < scene.surfaces.size(); ++si) {
    const SurfaceRect& rect = scene.surfaces[si];
    double area = rect.edge_u.cross(rect.edge_v).norm();
    auto count = static_cast<std::size_t>(std::llround(spec.density * area));
    Rng rng = root.child(si);
    for (std::size_t k = 0; k < count; ++k) {
      double a = rng.uniform();
      double b = rng.uniform();
      scene.cloud.points.push_back(rect.origin + a * rect.edge_u +
                                   b * rect.edge_v);
      scene.cloud.normals.push_back(rect.normal);
    }
  }
  scene.cloud.sensor_origin.setZero();
  return scene;
}

std::optional<RayHit> intersect_scene(const Scene& scene,
                                      const Eigen::Vector3d& origin,
                                      const Eigen::Vector3d& dir) {
  RayHit best;
  best.t = std::numeric_limits<double>::infinity();
  for (std::size_t si = 0; si < scene.surfaces.size(); ++si) {
    const SurfaceRect& rect = scene.surfaces[si];
    double denom = dir.dot(rect.normal);
    if (std::abs(denom) < 1e-14) continue;
    double t = (rect.origin - origin).dot(rect.normal) / denom;
    if (t <= 1e-9 || t >= best.t) continue;
    Eigen::Vector3d p = origin + t * dir;
    Eigen::Vector3d d = p - rect.origin;
    double a = d.dot(rect.edge_u) / rect.edge_u.squaredNorm();
    double b = d.dot(rect.edge_v) / rect.edge_v.squaredNorm();
    if (a < -1e-12 || a > 1.0 + 1e-12 || b < -1e-12 || b > 1.0 + 1e-12)
      continue;
    best.t = t;
    best.point = p;
    best.normal = rect.normal;
    best.surface = static_cast<int>(si);
  }
  if (!std::isfinite(best.t)) return std::nullopt;
  return best;
}

namespace {

// Station poses (sensor -> world). Horizontal steps yaw about the world
// vertical and slide in the plane; vertical steps pitch a few degrees about
// the sensor's lateral axis with a centimeter-scale lift. Positions reflect
// off a margin box so the rig stays inside the room.
std::vector<RigidMotion> generate_stations(const Eigen::Vector3d& dims,
                                           const TrajectorySpec& spec) {
  const double hx = dims.x() / 2, hy = dims.y() / 2, hz = dims.z() / 2;
  const double margin = std::min(0.8, 0.25 * std::min(hx, hy));
  const double zlo = -hz + std::min(0.5, 0.25 * hz);
  const double zhi = hz - std::min(0.5, 0.25 * hz);

  std::vector<RigidMotion> poses;
  RigidMotion pose;
  pose.translation = Eigen::Vector3d(0, 0, std::min(-hz + 1.2, zhi));
  poses.push_back(pose);

  int n_h = std::max(0, spec.n_horizontal);
  int n_v = std::max(0, spec.n_vertical);
  int total = n_h + n_v;
  Rng root(spec.seed);
  int used_h = 0, used_v = 0;
  for (int i = 0; i < total; ++i) {
    bool horizontal = (i % 2 == 0 && used_h < n_h) || used_v >= n_v;
    Rng rng = root.child(static_cast<uint64_t>(i));
    const RigidMotion& cur = poses.back();
    RigidMotion next = cur;
    if (horizontal) {
      ++used_h;
      double angle = spec.rotation_magnitude * rng.uniform(0.8, 1.2);
      if (rng.uniform() < 0.5) angle = -angle;
      next.rotation = Rotation::about_z(angle) * cur.rotation;
      double heading = rng.uniform(0.0, 2.0 * M_PI);
      double len = spec.translation_magnitude * rng.uniform(0.8, 1.2);
      Eigen::Vector3d delta(len * std::cos(heading), len * std::sin(heading),
                            0.0);
      Eigen::Vector3d p = cur.translation + delta;
      if (p.x() > hx - margin || p.x() < -hx + margin) delta.x() = -delta.x();
      if (p.y() > hy - margin || p.y() < -hy + margin) delta.y() = -delta.y();
      next.translation = cur.translation + delta;
    } else {
      ++used_v;
      double angle = rng.uniform(3.0, 6.0) * M_PI / 180.0;
      if (rng.uniform() < 0.5) angle = -angle;
      Eigen::Vector3d axis = cur.rotation * Eigen::Vector3d(0, 1, 0);
      next.rotation = Rotation::exp(angle * axis) * cur.rotation;
      double lift = rng.uniform(0.02, 0.05);
      if (rng.uniform() < 0.5) lift = -lift;
      double z = cur.translation.z() + lift;
      if (z > zhi || z < zlo) z = cur.translation.z() - lift;
      next.translation.z() = z;
    }
    poses.push_back(next);
  }
  return poses;
}

PointCloud simulate_scan(const Scene& scene, const RigidMotion& pose,
                         double range_sigma, const SimulationParams& params,
                         Rng rng) {
  PointCloud cloud;
  cloud.sensor_origin.setZero();
  int n_az = std::max(4, params.scan_azimuth_rays);
  int n_el = std::max(2, params.scan_elevation_rays);
  double el_lim = params.scan_elevation_limit;
  cloud.points.reserve(static_cast<std::size_t>(n_az) * n_el);
  Rotation world_rot_inv = pose.rotation.inverse();
  for (int j = 0; j < n_el; ++j) {
    double el = -el_lim + 2.0 * el_lim * j / (n_el - 1);
    for (int k = 0; k < n_az; ++k) {
      double az = -M_PI + 2.0 * M_PI * k / n_az;
      Eigen::Vector3d dir(std::cos(el) * std::cos(az),
                          std::cos(el) * std::sin(az), std::sin(el));
      auto hit = intersect_scene(scene, pose.translation, pose.rotation * dir);
      if (!hit) continue;
      double range = hit->t;
      if (range_sigma > 0.0) range += range_sigma * rng.normal();
      cloud.points.push_back(range * dir);
      cloud.normals.push_back(world_rot_inv * hit->normal);
    }
  }
  return cloud;
}

bool visible_from(const Scene& scene, const Eigen::Vector3d& cam_center,
                  const Eigen::Vector3d& p) {
  Eigen::Vector3d delta = p - cam_center;
  double dist = delta.norm();
  if (dist < 1e-9) return false;
  auto hit = intersect_scene(scene, cam_center, delta / dist);
  return hit && std::abs(hit->t - dist) <= 1e-6 * std::max(1.0, dist);
}

struct MotionMatches {
  std::vector<FeatureMatch> matches;
  std::vector<int> planted;
};

MotionMatches generate_matches(const Scene& scene, const CameraModel& cam,
                               const RigidMotion& cam1_pose,
                               const RigidMotion& cam2_pose,
                               const RigidMotion& camera_motion,
                               const NoiseSpec& noise, int target, Rng rng) {
  MotionMatches out;
  RigidMotion world_to_cam1 = cam1_pose.inverse();
  RigidMotion world_to_cam2 = cam2_pose.inverse();
  std::size_t n_surfaces = scene.surfaces.size();
  long attempts = 0;
  long max_attempts = static_cast<long>(target) * 200;
  while (static_cast<int>(out.matches.size()) < target &&
         attempts++ < max_attempts) {
    const SurfaceRect& rect =
        scene.surfaces[rng.uniform_index(n_surfaces)];
    Eigen::Vector3d p =
        rect.origin + rng.uniform() * rect.edge_u + rng.uniform() * rect.edge_v;
    Eigen::Vector3d q1 = world_to_cam1.apply(p);
    Eigen::Vector3d q2 = world_to_cam2.apply(p);
    auto proj1 = cam.project(q1);
    auto proj2 = cam.project(q2);
    if (!proj1.ok() || !proj2.ok()) continue;
    if (!cam.in_bounds(proj1.value().pixel) ||
        !cam.in_bounds(proj2.value().pixel))
      continue;
    if (!visible_from(scene, cam1_pose.translation, p) ||
        !visible_from(scene, cam2_pose.translation, p))
      continue;
    FeatureMatch m;
    if (noise.pixel_sigma > 0.0) {
      Eigen::Vector2d px1 =
          proj1.value().pixel +
          noise.pixel_sigma * Eigen::Vector2d(rng.normal(), rng.normal());
      Eigen::Vector2d px2 =
          proj2.value().pixel +
          noise.pixel_sigma * Eigen::Vector2d(rng.normal(), rng.normal());
      m.ray1 = cam.unproject(px1);
      m.ray2 = cam.unproject(px2);
    } else {
      m.ray1 = q1.normalized();
      m.ray2 = q2.normalized();
    }
    m.weight = 1.0;
    out.matches.push_back(m);
  }

  std::size_t n = out.matches.size();
  auto n_out = static_cast<std::size_t>(
      std::llround(noise.match_outlier_fraction * static_cast<double>(n)));
  if (n_out == 0 || n == 0) return out;

  Eigen::Matrix3d essential = Eigen::Matrix3d::Zero();
  bool have_essential = camera_motion.translation.norm() > 1e-12;
  if (have_essential)
    essential = skew(camera_motion.translation.normalized()) *
                camera_motion.rotation.matrix();
  const double min_offset = 1.0 * M_PI / 180.0;

  std::vector<bool> taken(n, false);
  while (out.planted.size() < n_out) {
    auto idx = static_cast<std::size_t>(rng.uniform_index(n));
    if (taken[idx]) continue;
    taken[idx] = true;
    FeatureMatch& m = out.matches[idx];
    for (int tries = 0; tries < 1000; ++tries) {
      double z = rng.uniform(-1.0, 1.0);
      double a = rng.uniform(0.0, 2.0 * M_PI);
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      Eigen::Vector3d ray(r * std::cos(a), r * std::sin(a), z);
      FeatureMatch probe;
      probe.ray1 = m.ray1;
      probe.ray2 = ray;
      bool far_enough =
          have_essential
              ? epipolar_residual(essential, probe) >= min_offset
              : std::acos(std::clamp(ray.dot(m.ray2), -1.0, 1.0)) >=
                    5.0 * M_PI / 180.0;
      if (!far_enough) continue;
      m.ray2 = ray;
      break;
    }
    out.planted.push_back(static_cast<int>(idx));
  }
  std::sort(out.planted.begin(), out.planted.end());
  return out;
}

uint64_t dataset_fingerprint(const Scene& scene,
                             const TrajectorySpec& trajectory,
                             const RigidMotion& extrinsic,
                             const CameraModel& cam, const NoiseSpec& noise,
                             uint64_t seed, const SimulationParams& params) {
  uint64_t h = mix64(0x6d6f63616cull, seed);
  h = fold(h, static_cast<uint64_t>(scene.cloud.size()));
  h = fold(h, static_cast<uint64_t>(scene.surfaces.size()));
  for (int i = 0; i < 3; ++i) h = fold(h, scene.dimensions[i]);
  h = fold(h, static_cast<uint64_t>(trajectory.n_horizontal));
  h = fold(h, static_cast<uint64_t>(trajectory.n_vertical));
  h = fold(h, trajectory.rotation_magnitude);
  h = fold(h, trajectory.translation_magnitude);
  h = fold(h, trajectory.seed);
  Eigen::Matrix4d m = extrinsic.matrix();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) h = fold(h, m(r, c));
  h = fold(h, static_cast<uint64_t>(cam.kind));
  h = fold(h, static_cast<uint64_t>(cam.width));
  h = fold(h, static_cast<uint64_t>(cam.height));
  h = fold(h, cam.fx);
  h = fold(h, cam.fy);
  h = fold(h, cam.cx);
  h = fold(h, cam.cy);
  h = fold(h, noise.lidar_range_sigma);
  h = fold(h, noise.pixel_sigma);
  h = fold(h, noise.match_outlier_fraction);
  h = fold(h, noise.track_outlier_fraction);
  h = fold(h, static_cast<uint64_t>(params.scan_azimuth_rays));
  h = fold(h, static_cast<uint64_t>(params.scan_elevation_rays));
  h = fold(h, params.scan_elevation_limit);
  h = fold(h, static_cast<uint64_t>(params.target_matches));
  return h;
}

}  // namespace

SimulatedDataset simulate_dataset(const Scene& scene,
                                  const TrajectorySpec& trajectory,
                                  const RigidMotion& true_extrinsic,
                                  const CameraModel& cam,
                                  const NoiseSpec& noise, std::uint64_t seed,
                                  const SimulationParams& params) {
  SimulatedDataset sim;
  sim.scene = std::make_shared<const Scene>(scene);
  sim.oracle.true_extrinsic = true_extrinsic;
  sim.oracle.seed = seed;
  sim.oracle.dataset_id = hex16(dataset_fingerprint(
      scene, trajectory, true_extrinsic, cam, noise, seed, params));

  sim.oracle.lidar_poses = generate_stations(scene.dimensions, trajectory);
  std::size_t n_stations = sim.oracle.lidar_poses.size();
  std::size_t n_motions = n_stations - 1;

  RigidMotion x_inv = true_extrinsic.inverse();
  for (std::size_t i = 0; i < n_stations; ++i)
    sim.oracle.camera_poses.push_back(
        compose(sim.oracle.lidar_poses[i], x_inv));
  for (std::size_t i = 0; i < n_motions; ++i) {
    RigidMotion b = compose(sim.oracle.lidar_poses[i + 1].inverse(),
                            sim.oracle.lidar_poses[i]);
    sim.oracle.lidar_motions.push_back(b);
    sim.oracle.camera_motions.push_back(
        compose(compose(true_extrinsic, b), x_inv));
  }

  Rng root(seed);
  const uint64_t scan_seed = root.child(1).seed();
  const uint64_t match_seed = root.child(2).seed();
  const uint64_t tracker_seed = root.child(3).seed();

  const Scene& sc = *sim.scene;
  sim.data.camera = cam;
  sim.data.scans = map_indices<PointCloud>(
      n_stations,
      [&](std::size_t i) {
        return simulate_scan(sc, sim.oracle.lidar_poses[i],
                             noise.lidar_range_sigma, params,
                             Rng(scan_seed).child(i));
      },
      params.parallel);

  auto motion_matches = map_indices<MotionMatches>(
      n_motions,
      [&](std::size_t i) {
        return generate_matches(sc, cam, sim.oracle.camera_poses[i],
                                sim.oracle.camera_poses[i + 1],
                                sim.oracle.camera_motions[i], noise,
                                params.target_matches,
                                Rng(match_seed).child(i));
      },
      params.parallel);

  for (std::size_t i = 0; i < n_motions; ++i) {
    sim.data.matches.push_back(std::move(motion_matches[i].matches));
    sim.oracle.planted_match_outliers.push_back(
        std::move(motion_matches[i].planted));
    sim.data.trackers.push_back(std::make_shared<OracleTracker>(
        sim.scene, sim.oracle.camera_poses[i], sim.oracle.camera_poses[i + 1],
        cam, noise.pixel_sigma, noise.track_outlier_fraction,
        Rng(tracker_seed).child(i).seed()));
    char buf[16];
    std::snprintf(buf, sizeof(buf), "m%03zu", i);
    sim.data.motion_ids.emplace_back(buf);
  }
  return sim;
}

std::pair<double, double> evaluate_extrinsic(const RigidMotion& estimate,
                                             const RigidMotion& truth) {
  double rot_deg =
      rotation_distance(estimate.rotation, truth.rotation) * 180.0 / M_PI;
  double trans = (estimate.translation - truth.translation).norm();
  return {rot_deg, trans};
}

OracleTracker::OracleTracker(std::shared_ptr<const Scene> scene,
                             const RigidMotion& cam1_pose_world,
                             const RigidMotion& cam2_pose_world,
                             const CameraModel& cam, double pixel_sigma,
                             double outlier_fraction, std::uint64_t seed)
    : scene_(std::move(scene)),
      cam1_pose_(cam1_pose_world),
      world_to_cam2_(cam2_pose_world.inverse()),
      cam_(cam),
      pixel_sigma_(pixel_sigma),
      outlier_fraction_(outlier_fraction),
      seed_(seed) {}

std::optional<Tracker::Track> OracleTracker::track(
    const Eigen::Vector2d& pixel1) const {
  Eigen::Vector3d ray = cam_.unproject(pixel1);
  auto hit = intersect_scene(*scene_, cam1_pose_.translation,
                             cam1_pose_.rotation * ray);
  if (!hit) return std::nullopt;
  Eigen::Vector3d q2 = world_to_cam2_.apply(hit->point);
  auto proj = cam_.project(q2);
  if (!proj.ok() || !cam_.in_bounds(proj.value().pixel)) return std::nullopt;

  Eigen::Vector2d pixel2 = proj.value().pixel;
  // key the noise off 1/8-pixel cells so reruns from nearly identical query
  // pixels return the same track, the way a feature tracker would
  const auto cell = [](double v) {
    return static_cast<uint64_t>(static_cast<int64_t>(std::llround(v * 8.0)));
  };
  uint64_t h = mix64(mix64(seed_, cell(pixel1.x())), cell(pixel1.y()));
  if (outlier_fraction_ > 0.0 &&
      to_unit_open(mix64(h, 7)) < outlier_fraction_) {
    pixel2.x() = to_unit_open(mix64(h, 8)) * (cam_.width - 1);
    pixel2.y() = to_unit_open(mix64(h, 9)) * (cam_.height - 1);
  } else if (pixel_sigma_ > 0.0) {
    double u1 = to_unit_open(mix64(h, 1));
    double u2 = to_unit_open(mix64(h, 2));
    double radius = std::sqrt(-2.0 * std::log(u1));
    pixel2.x() += pixel_sigma_ * radius * std::cos(2.0 * M_PI * u2);
    pixel2.y() += pixel_sigma_ * radius * std::sin(2.0 * M_PI * u2);
    pixel2.x() = std::clamp(pixel2.x(), 0.0, cam_.width - 1.0);
    pixel2.y() = std::clamp(pixel2.y(), 0.0, cam_.height - 1.0);
  }
  Track t;
  t.pixel = pixel2;
  t.quality = 1.0;
  return t;
}

}  // namespace motioncal
