#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "motioncal/geometry.hpp"
#include "motioncal/optim.hpp"
#include "motioncal/result.hpp"

namespace motioncal {

// A 2D-2D correspondence as bearing rays, camera-model agnostic.
struct FeatureMatch {
  Eigen::Vector3d ray1 = Eigen::Vector3d::UnitZ();  // unit, camera-1 frame
  Eigen::Vector3d ray2 = Eigen::Vector3d::UnitZ();  // unit, camera-2 frame
  double weight = 1.0;
};

struct RansacParams {
  int iterations = 1000;
  double inlier_threshold = 0.2 * M_PI / 180.0;  // radians, ray-to-plane angle
  std::uint64_t seed = 0;
  int min_inliers = 12;
  bool parallel = true;
};

struct EssentialFit {
  Eigen::Matrix3d essential;  // rank 2, equal nonzero singular values
  std::vector<int> inliers;   // ascending indices into the match list
};

// Angle between ray2 and the epipolar plane that `essential` assigns to
// ray1; the residual scored by RANSAC and thresholded for inliers.
double epipolar_residual(const Eigen::Matrix3d& essential,
                         const FeatureMatch& match);

// Normalized 8-point kernel inside RANSAC with singular-structure
// projection, then iterative refit on the consensus set. Deterministic for
// a fixed seed regardless of thread count.
Result<EssentialFit> ransac_essential(const std::vector<FeatureMatch>& matches,
                                      const RansacParams& params);

// Picks the (R, t direction) candidate with the most positive-depth votes.
// Convention: ray2 ~ R * ray1 + direction (forward point transfer).
Result<ScaledMotion> decompose_essential(const Eigen::Matrix3d& essential,
                                         const std::vector<FeatureMatch>& matches,
                                         const std::vector<int>& inliers);

// Descends the sum of squared ray-to-epipolar-plane angles over rotation
// and baseline direction.
ScaledMotion refine_epipolar_angular(const std::vector<FeatureMatch>& matches,
                                     const std::vector<int>& inliers,
                                     const ScaledMotion& init,
                                     OptimSummary* summary = nullptr);

}  // namespace motioncal
