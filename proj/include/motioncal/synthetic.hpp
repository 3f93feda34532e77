#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "motioncal/camera.hpp"
#include "motioncal/dataset.hpp"
#include "motioncal/geometry.hpp"
#include "motioncal/point_cloud.hpp"
#include "motioncal/tracker.hpp"

namespace motioncal {

struct SceneSpec {
  enum class Kind { BoxRoom, BoxRoomWithStep };
  Kind kind = Kind::BoxRoom;
  Eigen::Vector3d dimensions{10.0, 8.0, 3.0};  // meters, room extents
  double density = 100.0;                      // points per square meter
  std::uint64_t seed = 0;
};

// Analytic rectangle: origin corner plus two edge vectors; the normal
// faces the room interior.
struct SurfaceRect {
  Eigen::Vector3d origin;
  Eigen::Vector3d edge_u;
  Eigen::Vector3d edge_v;
  Eigen::Vector3d normal;
};

struct Scene {
  PointCloud cloud;  // world frame, exact surface normals
  std::vector<SurfaceRect> surfaces;
  Eigen::Vector3d dimensions;
};

// Room centered on the origin, z up, floor at z = -dims.z/2. The step
// variant recesses the lower half of the +x wall by 0.3 m, adding a
// horizontal step face at mid height.
Scene generate_scene(const SceneSpec& spec);

struct RayHit {
  double t = 0.0;
  Eigen::Vector3d point;
  Eigen::Vector3d normal;
  int surface = -1;
};

std::optional<RayHit> intersect_scene(const Scene& scene,
                                      const Eigen::Vector3d& origin,
                                      const Eigen::Vector3d& dir);

struct TrajectorySpec {
  int n_horizontal = 5;  // yaw motions
  int n_vertical = 5;    // small pitch motions (wheel-lift style)
  double rotation_magnitude = 15.0 * M_PI / 180.0;  // radians, horizontal
  double translation_magnitude = 0.3;               // meters, horizontal
  std::uint64_t seed = 0;
};

struct NoiseSpec {
  double lidar_range_sigma = 0.0;      // meters, along the ray
  double pixel_sigma = 0.0;            // pixels, isotropic
  double match_outlier_fraction = 0.0;
  double track_outlier_fraction = 0.0;
};

// Plumbing knobs with sane defaults; not part of the besides-noise physics.
struct SimulationParams {
  int scan_azimuth_rays = 360;
  int scan_elevation_rays = 90;
  double scan_elevation_limit = 75.0 * M_PI / 180.0;
  int target_matches = 300;
  bool parallel = true;
};

struct OracleRecord {
  RigidMotion true_extrinsic;                 // X: LiDAR -> camera
  std::vector<RigidMotion> lidar_poses;       // sensor -> world, per station
  std::vector<RigidMotion> camera_poses;      // camera -> world, per station
  std::vector<RigidMotion> lidar_motions;     // B_i
  std::vector<RigidMotion> camera_motions;    // A_i = X B_i X^-1
  std::vector<std::vector<int>> planted_match_outliers;  // per motion, sorted
  std::uint64_t seed = 0;
  std::string dataset_id;  // hash of every generation input
};

struct SimulatedDataset {
  MotionDataset data;
  OracleRecord oracle;
  std::shared_ptr<const Scene> scene;  // kept alive for the oracle trackers
};

// Full rig simulation: scans (sensor frames, exact normals, range noise),
// 2D-2D matches with planted outliers, and ground-truth-backed trackers.
// Every random draw derives from the seeds, so equal inputs reproduce the
// dataset bit for bit.
SimulatedDataset simulate_dataset(const Scene& scene,
                                  const TrajectorySpec& trajectory,
                                  const RigidMotion& true_extrinsic,
                                  const CameraModel& cam,
                                  const NoiseSpec& noise, std::uint64_t seed,
                                  const SimulationParams& params = {});

// (rotation error degrees, translation error meters)
std::pair<double, double> evaluate_extrinsic(const RigidMotion& estimate,
                                             const RigidMotion& truth);

// Ground-truth tracker: re-intersects the queried pixel's ray with the
// scene and projects the hit into camera 2. Noise is a pure hash of the
// query pixel, so calls are order- and thread-independent.
class OracleTracker : public Tracker {
 public:
  OracleTracker(std::shared_ptr<const Scene> scene,
                const RigidMotion& cam1_pose_world,
                const RigidMotion& cam2_pose_world, const CameraModel& cam,
                double pixel_sigma, double outlier_fraction,
                std::uint64_t seed);

  std::optional<Track> track(const Eigen::Vector2d& pixel1) const override;

 private:
  std::shared_ptr<const Scene> scene_;
  RigidMotion cam1_pose_;
  RigidMotion world_to_cam2_;
  CameraModel cam_;
  double pixel_sigma_;
  double outlier_fraction_;
  std::uint64_t seed_;
};

}  // namespace motioncal
