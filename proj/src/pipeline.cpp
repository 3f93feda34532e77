#include "motioncal/pipeline.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "motioncal/rng.hpp"

namespace motioncal {

namespace {

std::string motion_label(const MotionDataset& dataset, std::size_t i) {
  if (i < dataset.motion_ids.size() && !dataset.motion_ids[i].empty())
    return dataset.motion_ids[i];
  return "motion " + std::to_string(i);
}

struct InitialOdometry {
  std::vector<MotionPair> pairs;  // camera scale unknown
  std::vector<std::string> warnings;
};

InitialOdometry camera_odometry(const MotionDataset& dataset,
                                const std::vector<RigidMotion>& lidar_motions,
                                const CalibrationConfig& config) {
  InitialOdometry out;
  Rng root = Rng(config.seed).child(1);
  for (std::size_t i = 0; i < dataset.motion_count(); ++i) {
    RansacParams params = config.camera_ransac;
    params.seed = root.child(i).seed();
    params.parallel = config.parallel;
    auto fit = ransac_essential(dataset.matches[i], params);
    if (!fit.ok()) {
      out.warnings.push_back(motion_label(dataset, i) +
                             ": camera odometry failed (" +
                             fit.error().message + ")");
      continue;
    }
    auto motion = decompose_essential(fit.value().essential,
                                      dataset.matches[i], fit.value().inliers);
    if (!motion.ok()) {
      out.warnings.push_back(motion_label(dataset, i) +
                             ": essential decomposition failed (" +
                             motion.error().message + ")");
      continue;
    }
    MotionPair pair;
    pair.camera = refine_epipolar_angular(dataset.matches[i],
                                          fit.value().inliers, motion.value());
    pair.lidar = lidar_motions[i];
    pair.id = motion_label(dataset, i);
    out.pairs.push_back(std::move(pair));
  }
  return out;
}

std::vector<MotionPair> without_flagged(const std::vector<MotionPair>& pairs,
                                        const AdvisorParams& advisor,
                                        std::vector<std::string>* warnings) {
  std::vector<MotionPair> kept;
  auto diags = motion_advisor(pairs, advisor);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (diags[i].weak_rotation || diags[i].large_baseline) {
      warnings->push_back(pairs[i].id + ": excluded by motion advisor");
      continue;
    }
    kept.push_back(pairs[i]);
  }
  if (kept.size() < 2) {
    warnings->push_back(
        "motion advisor would leave fewer than 2 pairs; keeping all");
    return pairs;
  }
  return kept;
}

// Shared by run_calibration and estimate_motion_pairs: validates the
// dataset and produces the LiDAR motions, running ICP when needed.
Result<std::vector<RigidMotion>> resolve_lidar_motions(
    const MotionDataset& dataset, const CalibrationConfig& config) {
  const std::size_t n = dataset.motion_count();
  if (n < 2)
    return Error{ErrorCode::InitializationFailed,
                 "need at least 2 motions, got " + std::to_string(n)};
  if (dataset.lidar_motions.empty()) {
    if (dataset.scans.size() != n + 1)
      return Error{ErrorCode::InvalidArgument,
                   "scan count must be motion count + 1"};
    IcpParams icp = config.icp;
    icp.parallel = config.parallel;
    auto chain = odometry_chain(dataset.scans, icp);
    if (!chain.ok())
      return Error{ErrorCode::InitializationFailed,
                   "scan registration failed: " + chain.error().message};
    return chain;
  }
  if (dataset.lidar_motions.size() != n)
    return Error{ErrorCode::InvalidArgument,
                 "lidar_motions must match motion count"};
  if (!dataset.scans.empty() && dataset.scans.size() != n + 1)
    return Error{ErrorCode::InvalidArgument,
                 "scan count must be motion count + 1"};
  return dataset.lidar_motions;
}

}  // namespace

Result<std::vector<MotionPair>> estimate_motion_pairs(
    const MotionDataset& dataset, const CalibrationConfig& config,
    std::vector<std::string>* warnings) {
  auto lidar = resolve_lidar_motions(dataset, config);
  if (!lidar.ok()) return lidar.error();
  InitialOdometry initial = camera_odometry(dataset, lidar.value(), config);
  if (warnings)
    warnings->insert(warnings->end(), initial.warnings.begin(),
                     initial.warnings.end());
  return std::move(initial.pairs);
}

Result<CalibrationReport> run_calibration(const MotionDataset& dataset,
                                          const CalibrationConfig& config) {
  const std::size_t n = dataset.motion_count();
  if (dataset.trackers.size() != n)
    return Error{ErrorCode::InvalidArgument, "need one tracker per motion"};

  auto resolved = resolve_lidar_motions(dataset, config);
  if (!resolved.ok()) return resolved.error();
  std::vector<RigidMotion> lidar_motions = std::move(resolved.value());

  CalibrationReport report;
  InitialOdometry initial = camera_odometry(dataset, lidar_motions, config);
  report.warnings = std::move(initial.warnings);
  if (initial.pairs.size() < 2)
    return Error{ErrorCode::InitializationFailed,
                 "fewer than 2 usable camera motions after odometry"};

  std::vector<MotionPair> scaleless_pairs = initial.pairs;
  if (config.drop_flagged_pairs)
    scaleless_pairs =
        without_flagged(scaleless_pairs, config.advisor, &report.warnings);

  auto init_solve = calibrate(scaleless_pairs, CalibrationMode::Scaleless);
  if (!init_solve.ok())
    return Error{ErrorCode::InitializationFailed,
                 "initial hand-eye solve failed: " +
                     init_solve.error().message};

  Extrinsic current = std::move(init_solve.value());
  IterationRecord rec0;
  rec0.iteration = 0;
  rec0.extrinsic = current;
  rec0.pair_count = scaleless_pairs.size();
  report.per_iteration.push_back(rec0);

  // Dataset used by the fusion stage shares everything but the LiDAR
  // motions, which may have come from ICP above.
  MotionDataset fused = dataset;
  fused.lidar_motions = lidar_motions;

  std::vector<MotionPair> last_pairs = scaleless_pairs;
  std::vector<RigidMotion> warm_starts;
  Rng fusion_seeds = Rng(config.seed).child(2);

  Extrinsic best = current;
  bool have_best_scaled = false;
  int growth_streak = 0;
  report.status = PipelineStatus::MaxIterations;

  for (int k = 1; k <= config.max_outer_iterations; ++k) {
    const std::vector<RigidMotion>* previous =
        warm_starts.empty() ? nullptr : &warm_starts;
    ReestimateResult fusion = reestimate_all_motions(
        fused, current, previous, fusion_seeds.child(k).seed(),
        config.correspondences, config.p3p, config.parallel);
    for (const std::string& w : fusion.warnings)
      report.warnings.push_back("iteration " + std::to_string(k) + ": " + w);

    if (fusion.pairs.size() < 2) {
      report.status = PipelineStatus::Failed;
      report.failure_reason =
          "fewer than 2 motions survived re-estimation at iteration " +
          std::to_string(k);
      break;
    }

    std::vector<MotionPair> solve_pairs = fusion.pairs;
    if (config.drop_flagged_pairs)
      solve_pairs =
          without_flagged(solve_pairs, config.advisor, &report.warnings);

    auto solve = calibrate(solve_pairs, CalibrationMode::Scaled);
    if (!solve.ok()) {
      report.status = PipelineStatus::Failed;
      report.failure_reason = "scaled hand-eye solve failed at iteration " +
                              std::to_string(k) + ": " +
                              solve.error().message;
      break;
    }

    Extrinsic next = std::move(solve.value());
    IterationRecord rec;
    rec.iteration = k;
    rec.extrinsic = next;
    rec.mean_angular_residual = fusion.mean_angular_residual;
    rec.pair_count = solve_pairs.size();
    report.per_iteration.push_back(rec);

    // Warm starts for the next round: every index gets the hand-eye
    // prediction from its LiDAR motion, overwritten by this round's fused
    // estimate where one survived.
    warm_starts.assign(n, RigidMotion{});
    {
      RigidMotion x = next.transform;
      RigidMotion x_inv = x.inverse();
      for (std::size_t i = 0; i < n; ++i)
        warm_starts[i] = compose(compose(x, lidar_motions[i]), x_inv);
      std::size_t cursor = 0;
      for (std::size_t i = 0; i < n && cursor < fusion.pairs.size(); ++i) {
        if (fusion.pairs[cursor].id != motion_label(fused, i)) continue;
        warm_starts[i] = fusion.pairs[cursor].camera.to_rigid();
        ++cursor;
      }
    }

    last_pairs = std::move(fusion.pairs);

    if (!have_best_scaled ||
        next.translation_residual < best.translation_residual) {
      best = next;
      have_best_scaled = true;
    }

    // the residual floor jitters by tens of percent (RMS over few pairs,
    // correspondence churn); real divergence compounds past any slack
    if (next.translation_residual > best.translation_residual * 2.0) {
      if (++growth_streak >= 3) {
        report.status = PipelineStatus::Failed;
        report.failure_reason =
            "translation residual grew 3 consecutive iterations";
        current = best;
        break;
      }
    } else {
      growth_streak = 0;
    }

    double rot_change = rotation_distance(next.transform.rotation,
                                          current.transform.rotation);
    double trans_change =
        (next.transform.translation - current.transform.translation).norm();
    current = next;
    if (rot_change < config.rotation_eps &&
        trans_change < config.translation_eps) {
      report.status = PipelineStatus::Converged;
      break;
    }
  }

  // when the iteration budget ran out mid-oscillation, the lowest-residual
  // iterate is the better pick, same as on the divergence path
  if (report.status == PipelineStatus::MaxIterations && have_best_scaled)
    current = best;
  report.extrinsic = current;
  report.motion_diagnostics = motion_advisor(last_pairs, config.advisor);
  return report;
}

Result<double> predicted_projection_error(const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& a_est,
                                          const Eigen::Vector3d& v,
                                          double alpha, double beta) {
  Eigen::Vector3d true_dir = beta * v - a;
  Eigen::Vector3d est_dir = alpha * v - a_est;
  if (true_dir.norm() < 1e-12 || est_dir.norm() < 1e-12)
    return Error{ErrorCode::DegenerateGeometry,
                 "viewpoint coincides with the 3D point"};
  return true_dir.normalized().cross(est_dir.normalized()).norm();
}

std::vector<MotionDiagnostic> motion_advisor(
    const std::vector<MotionPair>& pairs, const AdvisorParams& params) {
  std::vector<MotionDiagnostic> out;
  out.reserve(pairs.size());
  for (const MotionPair& pair : pairs) {
    MotionDiagnostic d;
    d.id = pair.id;
    d.rotation_angle = pair.camera.rotation.angle();
    Eigen::Matrix3d gap =
        Eigen::Matrix3d::Identity() - pair.camera.rotation.matrix();
    d.propagation_gain =
        Eigen::JacobiSVD<Eigen::Matrix3d>(gap).singularValues()(0);
    d.translation_magnitude = pair.camera.scale.has_value()
                                  ? std::abs(*pair.camera.scale)
                                  : pair.lidar.translation.norm();
    d.weak_rotation = d.rotation_angle < params.weak_rotation_threshold;
    d.large_baseline =
        d.translation_magnitude > params.large_baseline_threshold;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace motioncal
