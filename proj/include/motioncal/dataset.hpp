#pragma once

#include <memory>
#include <string>
#include <vector>

#include "motioncal/camera.hpp"
#include "motioncal/epipolar.hpp"
#include "motioncal/geometry.hpp"
#include "motioncal/point_cloud.hpp"
#include "motioncal/tracker.hpp"

namespace motioncal {

// Everything one calibration run consumes: N+1 stations, N motions.
// Scans are in their own sensor frames. matches[i] and trackers[i] relate
// images i and i+1. lidar_motions may be left empty, in which case the
// pipeline estimates them by scan registration.
struct MotionDataset {
  CameraModel camera;
  std::vector<PointCloud> scans;
  std::vector<std::vector<FeatureMatch>> matches;
  std::vector<std::shared_ptr<const Tracker>> trackers;
  std::vector<RigidMotion> lidar_motions;
  std::vector<std::string> motion_ids;

  std::size_t motion_count() const { return matches.size(); }
};

}  // namespace motioncal
