#include "motioncal/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "motioncal/p3p.hpp"
#include "motioncal/parallel.hpp"
#include "motioncal/rng.hpp"

namespace motioncal {

Result<std::vector<Correspondence2D3D>> build_correspondences(
    const PointCloud& cloud, const Extrinsic& extrinsic,
    const RigidMotion& cam1_pose_world, const Tracker& tracker,
    const CameraModel& cam, const CorrespondenceParams& params) {
  if (cloud.points.empty()) {
    return Result<std::vector<Correspondence2D3D>>(ErrorCode::NoVisiblePoints,
                                                   "empty point cloud");
  }

  // angular z-buffer at image resolution: nearest point per pixel wins
  struct Bin {
    int point = -1;
    double range = std::numeric_limits<double>::infinity();
    Eigen::Vector2d pixel;
    Eigen::Vector3d cam_point;
  };
  std::vector<Bin> bins(static_cast<std::size_t>(cam.width) * cam.height);
  bool any_visible = false;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Eigen::Vector3d p_c = extrinsic.transform.apply(cloud.points[i]);
    const auto proj = cam.project(p_c);
    if (!proj.ok() || !cam.in_bounds(proj.value().pixel)) continue;
    any_visible = true;
    const int ix = std::min(cam.width - 1,
                            static_cast<int>(proj.value().pixel.x()));
    const int iy = std::min(cam.height - 1,
                            static_cast<int>(proj.value().pixel.y()));
    Bin& bin = bins[static_cast<std::size_t>(iy) * cam.width + ix];
    const double range = p_c.norm();
    if (range < bin.range) {
      bin.range = range;
      bin.point = static_cast<int>(i);
      bin.pixel = proj.value().pixel;
      bin.cam_point = p_c;
    }
  }
  if (!any_visible) {
    return Result<std::vector<Correspondence2D3D>>(
        ErrorCode::NoVisiblePoints, "no cloud point projects into camera 1");
  }

  std::vector<const Bin*> winners;
  for (const Bin& b : bins) {
    if (b.point >= 0) winners.push_back(&b);
  }
  std::vector<const Bin*> selected;
  if (static_cast<int>(winners.size()) > params.cap && params.cap > 0) {
    selected.reserve(params.cap);
    for (int k = 0; k < params.cap; ++k) {
      selected.push_back(
          winners[static_cast<std::size_t>(k) * winners.size() / params.cap]);
    }
  } else {
    selected = std::move(winners);
  }

  std::vector<Correspondence2D3D> out;
  out.reserve(selected.size());
  for (const Bin* b : selected) {
    const auto tr = tracker.track(b->pixel);
    if (!tr || tr->quality < params.min_track_quality) continue;
    Correspondence2D3D c;
    c.point = cam1_pose_world.apply(b->cam_point);
    c.ray = cam.unproject(tr->pixel);
    c.track_quality = tr->quality;
    out.push_back(c);
  }
  if (static_cast<int>(out.size()) < params.min_correspondences) {
    return Result<std::vector<Correspondence2D3D>>(
        ErrorCode::TrackerFailure,
        "tracker kept " + std::to_string(out.size()) + " of " +
            std::to_string(selected.size()) + " pixels, need " +
            std::to_string(params.min_correspondences));
  }
  return out;
}

namespace {

double angular_residual(const RigidMotion& world_to_cam,
                        const Correspondence2D3D& c) {
  const Eigen::Vector3d u = world_to_cam.apply(c.point);
  const double norm = u.norm();
  if (norm < 1e-12) return 0.0;
  const Eigen::Vector3d uh = u / norm;
  if (c.ray.dot(uh) <= 0.0) return M_PI;  // behind: never an inlier
  return std::asin(std::clamp(c.ray.cross(uh).norm(), 0.0, 1.0));
}

}  // namespace

Result<RigidMotion> p3p_initialize(
    const std::vector<Correspondence2D3D>& correspondences, std::uint64_t seed,
    const P3pRansacParams& params) {
  const int n = static_cast<int>(correspondences.size());
  if (n < 4) {
    return Result<RigidMotion>(
        ErrorCode::DegenerateConfiguration,
        "minimal pose needs at least 4 correspondences, have " +
            std::to_string(n));
  }

  Rng root(seed);
  std::vector<std::array<int, 3>> samples(params.iterations);
  for (int h = 0; h < params.iterations; ++h) {
    Rng rng = root.child(static_cast<std::uint64_t>(h));
    std::array<int, 3>& s = samples[h];
    int filled = 0;
    while (filled < 3) {
      const int c = static_cast<int>(rng.uniform_index(n));
      bool dup = false;
      for (int k = 0; k < filled; ++k) dup |= (s[k] == c);
      if (!dup) s[filled++] = c;
    }
  }

  struct Score {
    int count = -1;
    RigidMotion pose;  // camera -> world
    bool valid = false;
  };
  const std::vector<Score> scores = map_indices<Score>(
      samples.size(),
      [&](std::size_t h) -> Score {
        Score sc;
        const auto& s = samples[h];
        const std::array<Eigen::Vector3d, 3> world = {
            correspondences[s[0]].point, correspondences[s[1]].point,
            correspondences[s[2]].point};
        const std::array<Eigen::Vector3d, 3> rays = {
            correspondences[s[0]].ray, correspondences[s[1]].ray,
            correspondences[s[2]].ray};
        for (const RigidMotion& pose : solve_p3p(world, rays)) {
          const RigidMotion world_to_cam = pose.inverse();
          int count = 0;
          for (const auto& c : correspondences) {
            if (angular_residual(world_to_cam, c) < params.inlier_threshold) {
              ++count;
            }
          }
          if (count > sc.count) {
            sc.count = count;
            sc.pose = pose;
            sc.valid = true;
          }
        }
        return sc;
      },
      params.parallel);

  int best = -1;
  for (std::size_t h = 0; h < scores.size(); ++h) {
    if (scores[h].valid &&
        (best < 0 || scores[h].count > scores[best].count)) {
      best = static_cast<int>(h);
    }
  }
  if (best < 0) {
    return Result<RigidMotion>(
        ErrorCode::DegenerateConfiguration,
        "every minimal sample was degenerate (collinear points or "
        "coincident rays)");
  }
  if (scores[best].count < params.min_inliers) {
    return Result<RigidMotion>(ErrorCode::NoConsensus,
                               "best pose explains " +
                                   std::to_string(scores[best].count) +
                                   " correspondences, need " +
                                   std::to_string(params.min_inliers));
  }
  return scores[best].pose;
}

namespace {

class PoseRefineProblem : public TangentProblem {
 public:
  PoseRefineProblem(const std::vector<Correspondence2D3D>& correspondences,
                    const RigidMotion& lidar_to_cam1, const RigidMotion& init)
      : corrs_(correspondences), r_(init.rotation), t_(init.translation) {
    cam1_points_.reserve(correspondences.size());
    for (const auto& c : correspondences) {
      cam1_points_.push_back(lidar_to_cam1.apply(c.point));
    }
  }

  int tangent_dim() const override { return 6; }
  int block_count() const override { return static_cast<int>(corrs_.size()); }
  int block_dim() const override { return 3; }
  double block_weight(int b) const override {
    return corrs_[b].track_quality;
  }

  void evaluate(const Eigen::VectorXd& delta,
                Eigen::VectorXd& residuals) const override {
    const Eigen::Matrix3d r = (Rotation::exp(delta.head<3>()) * r_).matrix();
    const Eigen::Vector3d t = t_ + delta.tail<3>();
    for (std::size_t b = 0; b < corrs_.size(); ++b) {
      const Eigen::Vector3d u = r * cam1_points_[b] + t;
      const double norm = u.norm();
      residuals.segment<3>(3 * b) =
          norm < 1e-12 ? Eigen::Vector3d::Zero().eval()
                       : corrs_[b].ray.cross(u / norm).eval();
    }
  }

  void apply_step(const Eigen::VectorXd& delta) override {
    r_ = Rotation::exp(delta.head<3>()) * r_;
    t_ += delta.tail<3>();
  }

  RigidMotion motion() const { return RigidMotion{r_, t_}; }

 private:
  const std::vector<Correspondence2D3D>& corrs_;
  std::vector<Eigen::Vector3d> cam1_points_;  // X(p), camera-1 frame
  Rotation r_;
  Eigen::Vector3d t_;
};

}  // namespace

RigidMotion refine_pose_angular(
    const std::vector<Correspondence2D3D>& correspondences,
    const Extrinsic& extrinsic, const RigidMotion& init, OptimSummary* summary,
    const PoseRefineParams& params) {
  PoseRefineProblem problem(correspondences, extrinsic.transform, init);

  Eigen::VectorXd r0(3 * correspondences.size());
  problem.evaluate(Eigen::VectorXd::Zero(6), r0);
  std::vector<double> norms(correspondences.size());
  for (std::size_t b = 0; b < correspondences.size(); ++b) {
    norms[b] = r0.segment<3>(3 * b).norm();
  }
  const std::size_t mid = norms.size() / 2;
  std::nth_element(norms.begin(), norms.begin() + mid, norms.end());

  OptimOptions opt;
  opt.loss = RobustLoss::Huber;
  opt.huber_scale = std::max(3.0 * norms[mid], params.huber_floor);
  const OptimSummary s = minimize(problem, opt);
  if (summary) *summary = s;
  return problem.motion();
}

ReestimateResult reestimate_all_motions(
    const MotionDataset& dataset, const Extrinsic& extrinsic,
    const std::vector<RigidMotion>* previous_motions, std::uint64_t seed,
    const CorrespondenceParams& corr_params, const P3pRansacParams& p3p_params,
    bool parallel) {
  const std::size_t n = dataset.motion_count();
  const RigidMotion x = extrinsic.transform;
  const RigidMotion x_inv = x.inverse();

  struct PerMotion {
    bool ok = false;
    MotionPair pair;
    std::string warning;
    double residual_sum = 0.0;
    std::size_t residual_count = 0;
  };

  const std::vector<PerMotion> results = map_indices<PerMotion>(
      n,
      [&](std::size_t i) -> PerMotion {
        PerMotion pm;
        const std::string id = i < dataset.motion_ids.size()
                                   ? dataset.motion_ids[i]
                                   : std::to_string(i);
        if (i >= dataset.scans.size() || i >= dataset.trackers.size() ||
            !dataset.trackers[i] || i >= dataset.lidar_motions.size()) {
          pm.warning = "motion " + id + ": incomplete dataset entry";
          return pm;
        }
        auto corrs = build_correspondences(dataset.scans[i], extrinsic, x_inv,
                                           *dataset.trackers[i],
                                           dataset.camera, corr_params);
        if (!corrs.ok()) {
          pm.warning = "motion " + id + ": " + corrs.error().message;
          return pm;
        }

        RigidMotion init;
        if (previous_motions && i < previous_motions->size()) {
          init = (*previous_motions)[i];
        } else {
          auto pose = p3p_initialize(corrs.value(), mix64(seed, i), p3p_params);
          if (!pose.ok()) {
            pm.warning = "motion " + id + ": " + pose.error().message;
            return pm;
          }
          init = compose(pose.value().inverse(), x_inv);
        }

        const RigidMotion a =
            refine_pose_angular(corrs.value(), extrinsic, init);
        pm.pair.camera = ScaledMotion::from_rigid(a);
        pm.pair.lidar = dataset.lidar_motions[i];
        pm.pair.id = id;
        pm.ok = true;

        const RigidMotion world_to_cam2 = compose(a, x);
        for (const auto& c : corrs.value()) {
          const Eigen::Vector3d u = world_to_cam2.apply(c.point);
          const double norm = u.norm();
          if (norm < 1e-12) continue;
          pm.residual_sum += c.ray.cross(u / norm).norm();
          pm.residual_count += 1;
        }
        return pm;
      },
      parallel);

  ReestimateResult out;
  double sum = 0.0;
  std::size_t count = 0;
  for (const PerMotion& pm : results) {
    if (pm.ok) {
      out.pairs.push_back(pm.pair);
      sum += pm.residual_sum;
      count += pm.residual_count;
    } else {
      out.warnings.push_back(pm.warning);
    }
  }
  out.correspondence_count = count;
  out.mean_angular_residual = count > 0 ? sum / static_cast<double>(count) : 0.0;
  return out;
}

}  // namespace motioncal
