#pragma once

#include <vector>

#include "motioncal/geometry.hpp"
#include "motioncal/point_cloud.hpp"
#include "motioncal/result.hpp"

namespace motioncal {

struct IcpParams {
  double initial_reject_distance = 0.5;  // meters
  double final_reject_distance = 0.02;   // meters
  double shrink_factor = 0.7;
  int max_iterations = 20;               // per threshold level
  double convergence_eps = 1e-7;         // meters of point motion per step
  bool parallel = true;
};

struct IcpResult {
  RigidMotion motion;  // maps source-frame points into the target frame
  double rms_residual = 0.0;   // meters, over accepted correspondences
  double inlier_fraction = 0.0;
  int iterations = 0;
};

// KNN plane fits (k=10) with normals oriented toward the sensor origin.
// Points whose neighborhood is too sparse keep a zero normal.
PointCloud estimate_normals(const PointCloud& cloud, bool parallel = true);

// Point-to-plane ICP with projective correspondence lookup in the target's
// angular grid (gaze-direction association) and a geometrically shrinking
// rejection threshold. Falls back to point-to-point where the target lacks
// a normal. rms_trace, when given, records the residual after every
// iteration.
Result<IcpResult> icp_align(const PointCloud& source, const PointCloud& target,
                            const RigidMotion& init, const IcpParams& params,
                            std::vector<double>* rms_trace = nullptr);

// Consecutive pairwise alignment, each initialized at identity
// (stop-and-scan). Returns N-1 motions; fails on the first bad pair.
Result<std::vector<RigidMotion>> odometry_chain(
    const std::vector<PointCloud>& scans, const IcpParams& params);

}  // namespace motioncal
