#pragma once

#include <Eigen/Core>

#include "motioncal/result.hpp"

namespace motioncal {

enum class CameraKind { Perspective, SphericalPanorama };

struct Projection {
  Eigen::Vector2d pixel;
  Eigen::Vector3d ray;  // unit, equals p_c normalized
};

// Pinhole or equirectangular-panorama camera. All projections operate on
// points expressed in the camera frame (x right, y down, z forward).
struct CameraModel {
  CameraKind kind = CameraKind::SphericalPanorama;
  int width = 2048;    // pixels
  int height = 1024;   // pixels
  double fx = 500.0;   // perspective only
  double fy = 500.0;
  double cx = 320.0;
  double cy = 240.0;

  static CameraModel perspective(double fx, double fy, double cx, double cy,
                                 int width, int height);
  static CameraModel spherical(int width, int height);

  // BehindCamera for perspective points with z <= 0 or |p_c| = 0.
  Result<Projection> project(const Eigen::Vector3d& p_c) const;

  // Unit ray through the pixel center. Pixels may lie outside the image
  // bounds; the mapping extends continuously.
  Eigen::Vector3d unproject(const Eigen::Vector2d& pixel) const;

  bool in_bounds(const Eigen::Vector2d& pixel) const {
    return pixel.x() >= 0.0 && pixel.x() <= width - 1.0 && pixel.y() >= 0.0 &&
           pixel.y() <= height - 1.0;
  }
};

}  // namespace motioncal
