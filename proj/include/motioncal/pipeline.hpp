#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "motioncal/dataset.hpp"
#include "motioncal/epipolar.hpp"
#include "motioncal/fusion.hpp"
#include "motioncal/geometry.hpp"
#include "motioncal/handeye.hpp"
#include "motioncal/icp.hpp"
#include "motioncal/result.hpp"

namespace motioncal {

struct AdvisorParams {
  double weak_rotation_threshold = 5.0 * M_PI / 180.0;  // radians
  double large_baseline_threshold = 0.5;                // meters
};

struct CalibrationConfig {
  int max_outer_iterations = 20;
  double rotation_eps = 1e-5;     // radians, change between outer iterations
  double translation_eps = 1e-5;  // meters
  std::uint64_t seed = 0;
  RansacParams camera_ransac;
  IcpParams icp;
  CorrespondenceParams correspondences;
  P3pRansacParams p3p;
  AdvisorParams advisor;
  // The advisor only diagnoses unless this is set; then flagged motions are
  // excluded from the scaled solves (never from re-estimation).
  bool drop_flagged_pairs = false;
  bool parallel = true;
};

enum class PipelineStatus { Converged, MaxIterations, Failed };

struct IterationRecord {
  int iteration = 0;  // 0 is the scaleless initialization
  Extrinsic extrinsic;
  // Mean angular reprojection residual of the fused pose estimates, in
  // sine units; NaN for iteration 0 where no fusion has run yet.
  double mean_angular_residual = std::numeric_limits<double>::quiet_NaN();
  std::size_t pair_count = 0;
};

struct MotionDiagnostic {
  std::string id;
  double rotation_angle = 0.0;         // camera rotation, radians
  double propagation_gain = 0.0;       // operator norm of (I - Ra), in [0, 2]
  double translation_magnitude = 0.0;  // meters
  bool weak_rotation = false;
  bool large_baseline = false;
};

struct CalibrationReport {
  Extrinsic extrinsic;
  std::vector<IterationRecord> per_iteration;
  std::vector<MotionDiagnostic> motion_diagnostics;
  PipelineStatus status = PipelineStatus::Failed;
  std::string failure_reason;         // empty unless status is Failed
  std::vector<std::string> warnings;  // dropped motions, fallbacks
};

// The alternating loop. Initialization: LiDAR odometry (unless the dataset
// provides motions), epipolar camera odometry, scaleless hand-eye solve.
// Each outer iteration re-estimates every camera motion against the current
// extrinsic via 2D-3D fusion, then re-solves hand-eye with the recovered
// scales. Divergence (translation residual growing three iterations in a
// row) stops the loop and reports the best iterate with status Failed.
// Hard errors are reserved for a failed initialization.
Result<CalibrationReport> run_calibration(const MotionDataset& dataset,
                                          const CalibrationConfig& config = {});

// The initialization stage alone: LiDAR odometry (when the dataset lacks
// motions) plus per-motion epipolar odometry, yielding scale-free pairs.
// Motions whose camera odometry fails are dropped with a warning.
Result<std::vector<MotionPair>> estimate_motion_pairs(
    const MotionDataset& dataset, const CalibrationConfig& config = {},
    std::vector<std::string>* warnings = nullptr);

// Image-plane error direction mismatch of one landmark: the camera sits at
// distance alpha (true) resp. beta (estimated viewpoint) along the unit ray
// v, while the landmark position is a (true) vs a_est. Returns the sine of
// the angle between the two viewing directions.
Result<double> predicted_projection_error(const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& a_est,
                                          const Eigen::Vector3d& v,
                                          double alpha, double beta);

std::vector<MotionDiagnostic> motion_advisor(
    const std::vector<MotionPair>& pairs, const AdvisorParams& params = {});

}  // namespace motioncal
