#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <optional>

#include "motioncal/result.hpp"

namespace motioncal {

class Rng;

struct AxisAngle {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();  // unit
  double angle = 0.0;                               // radians, in [0, pi]
};

// 3D rotation stored as an orthonormal matrix. Factories re-orthonormalize
// on drift so composed chains stay on SO(3).
class Rotation {
 public:
  Rotation() : mat_(Eigen::Matrix3d::Identity()) {}

  static Rotation from_matrix(const Eigen::Matrix3d& m);
  static Rotation from_quaternion(const Eigen::Quaterniond& q);
  static Rotation from_axis_angle(const AxisAngle& aa);
  // exp of so(3): rotation by |w| radians about w/|w|.
  static Rotation exp(const Eigen::Vector3d& w);
  static Rotation about_x(double radians);
  static Rotation about_y(double radians);
  static Rotation about_z(double radians);
  static Rotation random(Rng& rng);  // uniform on SO(3)

  const Eigen::Matrix3d& matrix() const { return mat_; }
  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(mat_); }

  // Rotation angle in [0, pi].
  double angle() const;

  // Fails with NearIdentity below the degenerate-angle threshold (1e-6 rad),
  // where the axis carries no information.
  Result<AxisAngle> axis_angle() const;

  // log map; zero vector at identity (no failure).
  Eigen::Vector3d log() const;

  Rotation inverse() const { return Rotation(mat_.transpose().eval()); }
  Rotation operator*(const Rotation& rhs) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return mat_ * v; }

  bool is_identity(double tol = 1e-12) const;

 private:
  explicit Rotation(const Eigen::Matrix3d& m) : mat_(m) {}
  Eigen::Matrix3d mat_;
};

// Angle of r1 * r2^-1, the standard rotation distance.
double rotation_distance(const Rotation& r1, const Rotation& r2);

// Rigid transform p -> rotation * p + translation. Composition follows
// matrix convention: compose(a, b) applies b first.
struct RigidMotion {
  Rotation rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();  // meters

  static RigidMotion identity() { return RigidMotion{}; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }
  RigidMotion inverse() const {
    Rotation rinv = rotation.inverse();
    return RigidMotion{rinv, -(rinv * translation)};
  }
  Eigen::Matrix4d matrix() const;
};

RigidMotion compose(const RigidMotion& a, const RigidMotion& b);

// Rotation plus a unit translation direction; scale in meters when known.
// The currency of monocular odometry, where |t| is unobservable.
struct ScaledMotion {
  Rotation rotation;
  Eigen::Vector3d direction = Eigen::Vector3d::UnitX();  // unit
  std::optional<double> scale;                           // meters, > 0

  static ScaledMotion from_rigid(const RigidMotion& m);
  // Requires scale; the caller guarantees it (e.g. post-fusion motions).
  RigidMotion to_rigid() const;
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

}  // namespace motioncal
