#include "motioncal/icp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "motioncal/kdtree.hpp"
#include "motioncal/parallel.hpp"

namespace motioncal {

namespace {

double median_nn_distance(const std::vector<Eigen::Vector3d>& pts,
                          const KdTree& tree) {
  const std::size_t n = pts.size();
  const std::size_t stride = std::max<std::size_t>(1, n / 2000);
  std::vector<double> dists;
  dists.reserve(n / stride + 1);
  for (std::size_t i = 0; i < n; i += stride) {
    const auto nn = tree.knn(pts[i], 2);
    if (nn.size() == 2) dists.push_back((pts[nn[1]] - pts[i]).norm());
  }
  if (dists.empty()) return 0.0;
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
  return dists[mid];
}

Eigen::Vector3d fit_normal(const std::vector<Eigen::Vector3d>& pts,
                           const std::vector<int>& idx) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int j : idx) mean += pts[j];
  mean /= static_cast<double>(idx.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int j : idx) {
    const Eigen::Vector3d d = pts[j] - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  // degenerate neighborhoods (collinear) have two near-zero eigenvalues
  if (eig.eigenvalues()(1) <= 1e-12 * std::max(eig.eigenvalues()(2), 1e-300)) {
    return Eigen::Vector3d::Zero();
  }
  return eig.eigenvectors().col(0).normalized();
}

}  // namespace

PointCloud estimate_normals(const PointCloud& cloud, bool parallel) {
  PointCloud out = cloud;
  const std::size_t n = cloud.points.size();
  out.normals.assign(n, Eigen::Vector3d::Zero());
  if (n < 3) return out;

  const KdTree tree(cloud.points);
  const double spacing = median_nn_distance(cloud.points, tree);
  const double radius = 4.0 * spacing;
  const double radius_sq = radius * radius;
  constexpr int kNeighbors = 10;

  out.normals = map_indices<Eigen::Vector3d>(
      n,
      [&](std::size_t i) -> Eigen::Vector3d {
        const Eigen::Vector3d& p = cloud.points[i];
        const auto nn = tree.knn(p, kNeighbors + 1);
        std::vector<int> kept;
        kept.reserve(nn.size());
        for (int j : nn) {
          if ((cloud.points[j] - p).squaredNorm() <= radius_sq) kept.push_back(j);
        }
        if (kept.size() < 3) return Eigen::Vector3d::Zero();
        // neighborhoods straddling two walls tilt a plain fit, so pick the
        // neighbor pair whose plane through p has the lowest 40th
        // percentile residual, then refit on that plane's inliers. Every
        // hypothesis passes through p, and only p's own wall can make
        // near-half the neighborhood exactly coplanar with it, so the
        // quantile score anchors the fit to p's wall.
        Eigen::Vector3d best_dir = Eigen::Vector3d::Zero();
        double best_q = std::numeric_limits<double>::infinity();
        std::vector<double> res(kept.size());
        const std::size_t q_idx = (2 * kept.size()) / 5;
        for (std::size_t a = 0; a + 1 < kept.size(); ++a) {
          const Eigen::Vector3d u = cloud.points[kept[a]] - p;
          for (std::size_t b = a + 1; b < kept.size(); ++b) {
            const Eigen::Vector3d v = cloud.points[kept[b]] - p;
            Eigen::Vector3d dir = u.cross(v);
            const double scale_sq = u.squaredNorm() * v.squaredNorm();
            if (dir.squaredNorm() <= 1e-12 * scale_sq) continue;
            dir.normalize();
            for (std::size_t j = 0; j < kept.size(); ++j) {
              res[j] = std::abs(dir.dot(cloud.points[kept[j]] - p));
            }
            std::nth_element(res.begin(), res.begin() + q_idx, res.end());
            if (res[q_idx] < best_q) {
              best_q = res[q_idx];
              best_dir = dir;
            }
          }
        }
        // a machine-zero quantile means a coplanar subset anchored to p's
        // own wall exists; without one (curved or noisy patches) the slice
        // is a biased sample and the plain centered fit does better
        std::vector<int> inliers;
        if (!best_dir.isZero() && best_q <= 1e-9 * radius) {
          const double gate = std::max(3.0 * best_q, 1e-9);
          for (int j : kept) {
            if (std::abs(best_dir.dot(cloud.points[j] - p)) <= gate) {
              inliers.push_back(j);
            }
          }
        }
        Eigen::Vector3d normal =
            fit_normal(cloud.points, inliers.size() >= 3 ? inliers : kept);
        if (normal.isZero()) return normal;
        if (normal.dot(cloud.sensor_origin - p) < 0.0) normal = -normal;
        return normal;
      },
      parallel);
  return out;
}

namespace {

// Azimuth/elevation occupancy grid over the target cloud, seen from its
// sensor origin. Bin size is twice the median angular point spacing, so a
// projected query lands in or next to the bin of its true counterpart.
class AngularGrid {
 public:
  AngularGrid(const PointCloud& cloud, double bin)
      : origin_(cloud.sensor_origin), bin_(bin) {
    n_az_ = std::max(1, static_cast<int>(std::ceil(2.0 * M_PI / bin_)));
    n_el_ = std::max(1, static_cast<int>(std::ceil(M_PI / bin_)));
    cells_.resize(static_cast<std::size_t>(n_az_) * n_el_);
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      const int c = cell_of(cloud.points[i]);
      if (c >= 0) cells_[c].push_back(static_cast<int>(i));
    }
  }

  // Closest target point (euclidean) among the 3x3 bin neighborhood of the
  // query's gaze direction. Ties resolve to the lower index.
  int lookup(const Eigen::Vector3d& q, const std::vector<Eigen::Vector3d>& pts,
             double* dist_sq) const {
    int iaz, iel;
    if (!bins_of(q, iaz, iel)) return -1;
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int de = -1; de <= 1; ++de) {
      const int e = iel + de;
      if (e < 0 || e >= n_el_) continue;
      for (int da = -1; da <= 1; ++da) {
        const int a = (iaz + da + n_az_) % n_az_;
        for (int idx : cells_[static_cast<std::size_t>(a) * n_el_ + e]) {
          const double d = (pts[idx] - q).squaredNorm();
          if (d < best_d || (d == best_d && idx < best)) {
            best_d = d;
            best = idx;
          }
        }
      }
    }
    *dist_sq = best_d;
    return best;
  }

 private:
  bool bins_of(const Eigen::Vector3d& p, int& iaz, int& iel) const {
    const Eigen::Vector3d d = p - origin_;
    const double r = d.norm();
    if (r < 1e-12) return false;
    const double az = std::atan2(d.y(), d.x());
    const double el = std::asin(std::clamp(d.z() / r, -1.0, 1.0));
    iaz = std::min(n_az_ - 1,
                   std::max(0, static_cast<int>((az + M_PI) / bin_)));
    iel = std::min(n_el_ - 1,
                   std::max(0, static_cast<int>((el + M_PI / 2.0) / bin_)));
    return true;
  }

  int cell_of(const Eigen::Vector3d& p) const {
    int iaz, iel;
    if (!bins_of(p, iaz, iel)) return -1;
    return iaz * n_el_ + iel;
  }

  Eigen::Vector3d origin_;
  double bin_;
  int n_az_ = 1, n_el_ = 1;
  std::vector<std::vector<int>> cells_;
};

double median_angular_spacing(const PointCloud& cloud) {
  std::vector<Eigen::Vector3d> dirs;
  dirs.reserve(cloud.points.size());
  for (const auto& p : cloud.points) {
    const Eigen::Vector3d d = p - cloud.sensor_origin;
    const double r = d.norm();
    if (r > 1e-12) dirs.push_back(d / r);
  }
  if (dirs.size() < 2) return 0.05;
  const KdTree tree(dirs);
  const double chord = median_nn_distance(dirs, tree);
  return 2.0 * std::asin(std::clamp(chord / 2.0, 0.0, 1.0));
}

struct Corr {
  int target = -1;
  double dist_sq = 0.0;
};

std::vector<double> threshold_schedule(const IcpParams& p) {
  std::vector<double> out;
  double d = p.initial_reject_distance;
  while (d > p.final_reject_distance) {
    out.push_back(d);
    d *= p.shrink_factor;
  }
  out.push_back(p.final_reject_distance);
  return out;
}

}  // namespace

Result<IcpResult> icp_align(const PointCloud& source, const PointCloud& target,
                            const RigidMotion& init, const IcpParams& params,
                            std::vector<double>* rms_trace) {
  if (source.points.empty() || target.points.empty()) {
    return Result<IcpResult>(ErrorCode::NoOverlap, "empty scan");
  }
  const PointCloud* tgt = &target;
  PointCloud tgt_with_normals;
  if (!target.has_normals()) {
    tgt_with_normals = estimate_normals(target, params.parallel);
    tgt = &tgt_with_normals;
  }
  const PointCloud* src = &source;
  PointCloud src_with_normals;
  if (!source.has_normals()) {
    src_with_normals = estimate_normals(source, params.parallel);
    src = &src_with_normals;
  }
  // cos 45 deg; discards cross-surface matches near edges, which otherwise
  // bias the plane residuals
  const double normal_gate = 0.7071067811865476;

  const double spacing = median_angular_spacing(*tgt);
  const double bin = std::clamp(2.0 * spacing, 1e-3, 0.2);
  const AngularGrid grid(*tgt, bin);

  double lever = 0.0;
  for (const auto& p : source.points) lever = std::max(lever, p.norm());
  lever = std::max(lever, 1.0);

  IcpResult result;
  result.motion = init;
  bool any_corr = false;
  int grow_streak = 0;
  double best_rms = std::numeric_limits<double>::infinity();

  for (const double reject : threshold_schedule(params)) {
    const double reject_sq = reject * reject;
    best_rms = std::numeric_limits<double>::infinity();
    grow_streak = 0;

    for (int it = 0; it < params.max_iterations; ++it) {
      const RigidMotion m = result.motion;
      const std::vector<Corr> corrs = map_indices<Corr>(
          source.points.size(),
          [&](std::size_t i) -> Corr {
            Corr c;
            double d = 0.0;
            const Eigen::Vector3d q = m.apply(source.points[i]);
            const int j = grid.lookup(q, tgt->points, &d);
            if (j < 0) return c;
            const Eigen::Vector3d& ns = src->normals[i];
            const Eigen::Vector3d& nt = tgt->normals[j];
            bool keep;
            if (!nt.isZero()) {
              // the plane metric is blind to tangential sampling offset, so
              // the gate must be too, or far sparse walls drop out
              const double r = nt.dot(q - tgt->points[j]);
              keep = r * r <= reject_sq;
              if (keep && !ns.isZero() &&
                  std::abs((m.rotation * ns).dot(nt)) < normal_gate) {
                keep = false;
              }
            } else {
              keep = d <= reject_sq;
            }
            if (keep) {
              c.target = j;
              c.dist_sq = d;
            }
            return c;
          },
          params.parallel);

      Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
      Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
      double sq_sum = 0.0;
      std::size_t n_rows = 0;
      std::size_t n_corr = 0;
      for (std::size_t i = 0; i < corrs.size(); ++i) {
        if (corrs[i].target < 0) continue;
        ++n_corr;
        const Eigen::Vector3d p = m.apply(source.points[i]);
        const Eigen::Vector3d& q = tgt->points[corrs[i].target];
        const Eigen::Vector3d& n = tgt->normals[corrs[i].target];
        if (!n.isZero()) {
          const double r = n.dot(p - q);
          Eigen::Matrix<double, 6, 1> j;
          j.head<3>() = p.cross(n);
          j.tail<3>() = n;
          h.noalias() += j * j.transpose();
          g.noalias() += j * r;
          sq_sum += r * r;
          n_rows += 1;
        } else {
          const Eigen::Vector3d r = p - q;
          Eigen::Matrix<double, 3, 6> j;
          j.leftCols<3>() = -skew(p);
          j.rightCols<3>() = Eigen::Matrix3d::Identity();
          h.noalias() += j.transpose() * j;
          g.noalias() += j.transpose() * r;
          sq_sum += r.squaredNorm();
          n_rows += 3;
        }
      }

      if (n_corr == 0) {
        if (!any_corr) {
          return Result<IcpResult>(ErrorCode::NoOverlap,
                                   "no correspondences within " +
                                       std::to_string(reject) + " m");
        }
        break;  // nothing to do at this threshold, move on
      }
      any_corr = true;
      ++result.iterations;

      const double rms = std::sqrt(sq_sum / static_cast<double>(n_rows));
      if (rms_trace) rms_trace->push_back(rms);
      // jitter within 5% of the best residual at this threshold is not growth
      if (rms > best_rms * 1.05) {
        if (++grow_streak >= 5) {
          return Result<IcpResult>(
              ErrorCode::Diverged,
              "residual grew 5 consecutive iterations (rms " +
                  std::to_string(rms) + " m)");
        }
      } else {
        grow_streak = 0;
      }
      best_rms = std::min(best_rms, rms);
      result.rms_residual = rms;
      result.inlier_fraction =
          static_cast<double>(n_corr) / static_cast<double>(source.points.size());

      // damped in case of planar-only degeneracy along the plane
      Eigen::Matrix<double, 6, 6> damped = h;
      damped.diagonal().array() += 1e-12 * (h.trace() + 1.0);
      const Eigen::Matrix<double, 6, 1> delta = damped.ldlt().solve(-g);
      if (!delta.allFinite()) break;
      const RigidMotion step{Rotation::exp(delta.head<3>()), delta.tail<3>()};
      result.motion = compose(step, result.motion);

      if (delta.tail<3>().norm() + delta.head<3>().norm() * lever <
          params.convergence_eps) {
        break;
      }
    }
  }
  return result;
}

Result<std::vector<RigidMotion>> odometry_chain(
    const std::vector<PointCloud>& scans, const IcpParams& params) {
  if (scans.size() < 2) {
    return Result<std::vector<RigidMotion>>(
        ErrorCode::InsufficientScans,
        "odometry needs at least 2 scans, have " + std::to_string(scans.size()));
  }
  std::vector<PointCloud> prepared;
  prepared.reserve(scans.size());
  for (const auto& s : scans) {
    prepared.push_back(s.has_normals() ? s : estimate_normals(s, params.parallel));
  }
  std::vector<RigidMotion> motions;
  motions.reserve(scans.size() - 1);
  for (std::size_t i = 0; i + 1 < prepared.size(); ++i) {
    auto res = icp_align(prepared[i], prepared[i + 1], RigidMotion::identity(),
                         params);
    if (!res.ok()) {
      return Result<std::vector<RigidMotion>>(
          res.error().code, "pair " + std::to_string(i) + " -> " +
                                std::to_string(i + 1) + ": " +
                                res.error().message);
    }
    motions.push_back(res.value().motion);
  }
  return motions;
}

}  // namespace motioncal
