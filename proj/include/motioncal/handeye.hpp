#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "motioncal/geometry.hpp"
#include "motioncal/optim.hpp"
#include "motioncal/result.hpp"

namespace motioncal {

// One synchronized motion interval: camera motion A (scale optional until
// fusion fixes it) and LiDAR motion B, both in the forward point-transfer
// convention p_next = M p_prev.
struct MotionPair {
  ScaledMotion camera;
  RigidMotion lidar;
  std::string id;
};

// X maps LiDAR-frame coordinates into the camera frame.
struct Extrinsic {
  RigidMotion transform;
  std::vector<double> scales;        // per-pair camera translation, meters
  std::vector<bool> scale_reliable;  // false when the camera barely moved
  double rotation_residual = 0.0;    // RMS pair mismatch angle, radians
  double translation_residual = 0.0; // RMS translation equation gap, meters
  double condition = 0.0;  // smallest singular value of the axis system
};

enum class CalibrationMode { Scaleless, Scaled };

// Orthogonal Procrustes over rotation-axis correspondences k_a = R k_b,
// weighted down for small-angle pairs. Requires axes spanning >= 2
// dimensions.
Result<Rotation> solve_rotation_linear(const std::vector<MotionPair>& pairs);

// Descends sum_i |Ra_i R - R Rb_i|_F from r0; never increases the cost.
Rotation refine_rotation(const std::vector<MotionPair>& pairs,
                         const Rotation& r0, OptimSummary* summary = nullptr);

struct TranslationSolution {
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  std::vector<double> scales;
  std::vector<bool> scale_reliable;
};

// Stacked least squares over (t, s_1..s_n) from rows
// (Ra_i - I) t + s_i dir_a_i = R tb_i.
Result<TranslationSolution> solve_translation_scales(
    const std::vector<MotionPair>& pairs, const Rotation& r);

// Descends sum_i |(Ra_i t + ta_i) - (R tb_i + t)| from t0 (sum of norms,
// not squared). Camera motions must carry scales.
Eigen::Vector3d refine_translation(const std::vector<MotionPair>& pairs,
                                   const Rotation& r,
                                   const Eigen::Vector3d& t0,
                                   OptimSummary* summary = nullptr);

// Full solve: rotation (linear + refinement) then translation. Scaleless
// mode estimates per-pair scales; scaled mode trusts the given ones and
// adds the robust translation refinement.
Result<Extrinsic> calibrate(const std::vector<MotionPair>& pairs,
                            CalibrationMode mode);

}  // namespace motioncal
