#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

namespace motioncal {

// Points in the sensor frame (meters). Normals, when present, are unit and
// parallel-indexed with points. Triangles index into points.
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> normals;
  std::vector<std::array<int, 3>> triangles;
  Eigen::Vector3d sensor_origin = Eigen::Vector3d::Zero();

  std::size_t size() const { return points.size(); }
  bool has_normals() const { return normals.size() == points.size() && !points.empty(); }
};

}  // namespace motioncal
