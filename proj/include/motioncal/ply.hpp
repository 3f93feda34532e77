#pragma once

#include <string>
#include <vector>

#include "motioncal/point_cloud.hpp"
#include "motioncal/result.hpp"

namespace motioncal {

// Text and binary_little_endian PLY. x/y/z are required, nx/ny/nz are
// optional; other vertex properties are skipped (reported through
// `warnings` when given). A "comment sensor_origin x y z" line round-trips
// the cloud's sensor origin. Parse failures carry the line (text) or byte
// offset (binary).
Result<PointCloud> read_point_cloud(const std::string& path,
                                    std::vector<std::string>* warnings = nullptr);

Result<bool> write_point_cloud(const std::string& path,
                               const PointCloud& cloud, bool binary = true);

}  // namespace motioncal
