#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "motioncal/camera.hpp"
#include "motioncal/dataset.hpp"
#include "motioncal/geometry.hpp"
#include "motioncal/handeye.hpp"
#include "motioncal/optim.hpp"
#include "motioncal/point_cloud.hpp"
#include "motioncal/result.hpp"
#include "motioncal/tracker.hpp"

namespace motioncal {

// A LiDAR point paired with the bearing under which the second camera saw
// it, the currency of scaled pose estimation.
struct Correspondence2D3D {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();  // world frame, meters
  Eigen::Vector3d ray = Eigen::Vector3d::UnitZ();   // unit, camera-2 frame
  double track_quality = 1.0;
};

struct CorrespondenceParams {
  int min_correspondences = 10;
  int cap = 2000;  // uniform over image bins
  double min_track_quality = 0.0;
};

// Projects every visible cloud point into camera 1 through the extrinsic
// (angular z-buffer at image resolution decides visibility), follows the
// pixel with the tracker, and pairs the tracked pixel's camera-2 ray with
// the 3D point expressed in the world frame via cam1_pose_world. The
// pipeline uses the scan's own LiDAR frame as the world, so it passes the
// inverse extrinsic here.
Result<std::vector<Correspondence2D3D>> build_correspondences(
    const PointCloud& cloud, const Extrinsic& extrinsic,
    const RigidMotion& cam1_pose_world, const Tracker& tracker,
    const CameraModel& cam, const CorrespondenceParams& params = {});

struct P3pRansacParams {
  int iterations = 500;
  double inlier_threshold = 0.5 * M_PI / 180.0;  // radians
  int min_inliers = 4;
  bool parallel = true;
};

// RANSAC over minimal 3-point pose hypotheses; returns the camera-2 pose
// (camera coordinates into the world frame) with the most angular inliers.
Result<RigidMotion> p3p_initialize(
    const std::vector<Correspondence2D3D>& correspondences, std::uint64_t seed,
    const P3pRansacParams& params = {});

struct PoseRefineParams {
  double huber_floor = 1e-12;  // scale = max(3 * median residual, floor)
};

// Descends the angular reprojection cost
// sum_j |ray_j x normalize(A(X(p_j)))| over the camera motion A, Huber
// weighted. init and the return value are A, not a world pose.
RigidMotion refine_pose_angular(
    const std::vector<Correspondence2D3D>& correspondences,
    const Extrinsic& extrinsic, const RigidMotion& init,
    OptimSummary* summary = nullptr, const PoseRefineParams& params = {});

struct ReestimateResult {
  std::vector<MotionPair> pairs;        // scaled camera motions
  std::vector<std::string> warnings;    // one per dropped motion
  double mean_angular_residual = 0.0;   // sine units, over all kept motions
  std::size_t correspondence_count = 0;
};

// Per motion: correspondences, then pose (P3P when no previous estimate is
// given, otherwise warm-started), then angular refinement. Motions run in
// parallel and merge in index order; failures drop the motion.
ReestimateResult reestimate_all_motions(
    const MotionDataset& dataset, const Extrinsic& extrinsic,
    const std::vector<RigidMotion>* previous_motions, std::uint64_t seed,
    const CorrespondenceParams& corr_params = {},
    const P3pRansacParams& p3p_params = {}, bool parallel = true);

}  // namespace motioncal
