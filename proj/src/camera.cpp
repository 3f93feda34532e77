#include "motioncal/camera.hpp"

#include <cmath>

namespace motioncal {

CameraModel CameraModel::perspective(double fx, double fy, double cx,
                                     double cy, int width, int height) {
  CameraModel cam;
  cam.kind = CameraKind::Perspective;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = cx;
  cam.cy = cy;
  cam.width = width;
  cam.height = height;
  return cam;
}

CameraModel CameraModel::spherical(int width, int height) {
  CameraModel cam;
  cam.kind = CameraKind::SphericalPanorama;
  cam.width = width;
  cam.height = height;
  return cam;
}

Result<Projection> CameraModel::project(const Eigen::Vector3d& p_c) const {
  const double norm = p_c.norm();
  if (norm < 1e-15) {
    return Result<Projection>(ErrorCode::BehindCamera,
                              "cannot project the camera center");
  }
  Projection out;
  out.ray = p_c / norm;
  if (kind == CameraKind::Perspective) {
    if (p_c.z() <= 0.0) {
      return Result<Projection>(ErrorCode::BehindCamera,
                                "point has non-positive depth");
    }
    out.pixel.x() = fx * p_c.x() / p_c.z() + cx;
    out.pixel.y() = fy * p_c.y() / p_c.z() + cy;
    return out;
  }
  // Equirectangular: azimuth from +z toward +x, elevation up (-y).
  const double theta = std::atan2(p_c.x(), p_c.z());
  const double phi = std::asin(std::clamp(-p_c.y() / norm, -1.0, 1.0));
  out.pixel.x() = (theta + M_PI) / (2.0 * M_PI) * width;
  out.pixel.y() = (M_PI / 2.0 - phi) / M_PI * height;
  return out;
}

Eigen::Vector3d CameraModel::unproject(const Eigen::Vector2d& pixel) const {
  if (kind == CameraKind::Perspective) {
    Eigen::Vector3d ray((pixel.x() - cx) / fx, (pixel.y() - cy) / fy, 1.0);
    return ray.normalized();
  }
  const double theta = pixel.x() / width * 2.0 * M_PI - M_PI;
  const double phi = M_PI / 2.0 - pixel.y() / height * M_PI;
  const double cp = std::cos(phi);
  return Eigen::Vector3d(cp * std::sin(theta), -std::sin(phi),
                         cp * std::cos(theta));
}

}  // namespace motioncal
