#include "motioncal/geometry.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "motioncal/rng.hpp"

namespace motioncal {

namespace {

Eigen::Matrix3d closest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d r = u * v.transpose();
  if (r.determinant() < 0.0) {
    u.col(2) *= -1.0;
    r = u * v.transpose();
  }
  return r;
}

double orthonormality_drift(const Eigen::Matrix3d& m) {
  return (m.transpose() * m - Eigen::Matrix3d::Identity()).norm();
}

}  // namespace

Rotation Rotation::from_matrix(const Eigen::Matrix3d& m) {
  if (orthonormality_drift(m) > 1e-12 || m.determinant() < 0.0) {
    return Rotation(closest_rotation(m));
  }
  return Rotation(m);
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  return Rotation(q.normalized().toRotationMatrix());
}

Rotation Rotation::from_axis_angle(const AxisAngle& aa) {
  return exp(aa.axis.normalized() * aa.angle);
}

Rotation Rotation::exp(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  if (theta < 1e-12) {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity() + skew(w);
    return from_matrix(m);
  }
  return Rotation(Eigen::AngleAxisd(theta, w / theta).toRotationMatrix());
}

Rotation Rotation::about_x(double radians) {
  return Rotation(
      Eigen::AngleAxisd(radians, Eigen::Vector3d::UnitX()).toRotationMatrix());
}

Rotation Rotation::about_y(double radians) {
  return Rotation(
      Eigen::AngleAxisd(radians, Eigen::Vector3d::UnitY()).toRotationMatrix());
}

Rotation Rotation::about_z(double radians) {
  return Rotation(
      Eigen::AngleAxisd(radians, Eigen::Vector3d::UnitZ()).toRotationMatrix());
}

Rotation Rotation::random(Rng& rng) {
  // Shoemake's method: uniform quaternion from three uniforms.
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  const double t2 = 2.0 * M_PI * u2;
  const double t3 = 2.0 * M_PI * u3;
  Eigen::Quaterniond q(a * std::sin(t2), a * std::cos(t2), b * std::sin(t3),
                       b * std::cos(t3));
  return from_quaternion(q);
}

double Rotation::angle() const {
  // acos((tr - 1) / 2) loses half the significant digits near 0 and pi;
  // atan2 of the split sine/cosine parts stays accurate at both ends.
  const Eigen::Vector3d s(mat_(2, 1) - mat_(1, 2), mat_(0, 2) - mat_(2, 0),
                          mat_(1, 0) - mat_(0, 1));
  const double sine = 0.5 * s.norm();
  const double cosine = 0.5 * (mat_.trace() - 1.0);
  return std::atan2(sine, cosine);
}

Result<AxisAngle> Rotation::axis_angle() const {
  Eigen::AngleAxisd aa(mat_);
  double angle = aa.angle();
  Eigen::Vector3d axis = aa.axis();
  if (angle < 0.0) {
    angle = -angle;
    axis = -axis;
  }
  if (angle < 1e-6) {
    return Result<AxisAngle>(ErrorCode::NearIdentity,
                             "rotation angle below 1e-6 rad, axis undefined");
  }
  return AxisAngle{axis.normalized(), angle};
}

Eigen::Vector3d Rotation::log() const {
  Eigen::AngleAxisd aa(mat_);
  return aa.axis() * aa.angle();
}

Rotation Rotation::operator*(const Rotation& rhs) const {
  Eigen::Matrix3d m = mat_ * rhs.mat_;
  if (orthonormality_drift(m) > 1e-12) {
    return Rotation(closest_rotation(m));
  }
  return Rotation(m);
}

bool Rotation::is_identity(double tol) const {
  return (mat_ - Eigen::Matrix3d::Identity()).lpNorm<Eigen::Infinity>() <= tol;
}

double rotation_distance(const Rotation& r1, const Rotation& r2) {
  return (r1 * r2.inverse()).angle();
}

Eigen::Matrix4d RigidMotion::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation.matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

RigidMotion compose(const RigidMotion& a, const RigidMotion& b) {
  return RigidMotion{a.rotation * b.rotation, a.apply(b.translation)};
}

ScaledMotion ScaledMotion::from_rigid(const RigidMotion& m) {
  const double norm = m.translation.norm();
  ScaledMotion out;
  out.rotation = m.rotation;
  if (norm > 0.0) {
    out.direction = m.translation / norm;
    out.scale = norm;
  } else {
    out.direction = Eigen::Vector3d::UnitX();
    out.scale = 0.0;
  }
  return out;
}

RigidMotion ScaledMotion::to_rigid() const {
  return RigidMotion{rotation, direction * scale.value()};
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

}  // namespace motioncal
