#include "motioncal/epipolar.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cmath>

#include "motioncal/parallel.hpp"
#include "motioncal/rng.hpp"

namespace motioncal {

namespace {

Eigen::Matrix3d project_to_essential(const Eigen::Matrix3d& e) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      e, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * Eigen::Vector3d(1.0, 1.0, 0.0).asDiagonal() *
         svd.matrixV().transpose();
}

// Linear epipolar system r2' E r1 = 0; one row per match, E row-major.
Eigen::Matrix3d solve_eight_point(const std::vector<FeatureMatch>& matches,
                                  const int* idx, int count,
                                  bool use_weights) {
  Eigen::MatrixXd a(count, 9);
  for (int r = 0; r < count; ++r) {
    const FeatureMatch& m = matches[idx[r]];
    const double w = use_weights ? m.weight : 1.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        a(r, 3 * i + j) = w * m.ray2(i) * m.ray1(j);
      }
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd e = svd.matrixV().col(8);
  Eigen::Matrix3d em;
  em << e(0), e(1), e(2), e(3), e(4), e(5), e(6), e(7), e(8);
  return project_to_essential(em);
}

std::vector<int> inliers_of(const Eigen::Matrix3d& e,
                            const std::vector<FeatureMatch>& matches,
                            double threshold) {
  std::vector<int> out;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (epipolar_residual(e, matches[i]) < threshold) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

}  // namespace

double epipolar_residual(const Eigen::Matrix3d& essential,
                         const FeatureMatch& match) {
  const Eigen::Vector3d n = essential * match.ray1;
  const double norm = n.norm();
  if (norm < 1e-12) return 0.0;
  return std::asin(std::clamp(std::abs(match.ray2.dot(n)) / norm, 0.0, 1.0));
}

Result<EssentialFit> ransac_essential(const std::vector<FeatureMatch>& matches,
                                      const RansacParams& params) {
  const int n = static_cast<int>(matches.size());
  if (n < 8) {
    return Result<EssentialFit>(
        ErrorCode::TooFewMatches,
        "essential estimation needs at least 8 matches, have " +
            std::to_string(n));
  }

  Rng root(params.seed);
  std::vector<std::array<int, 8>> samples(params.iterations);
  for (int h = 0; h < params.iterations; ++h) {
    Rng rng = root.child(static_cast<std::uint64_t>(h));
    std::array<int, 8>& s = samples[h];
    int filled = 0;
    while (filled < 8) {
      const int c = static_cast<int>(rng.uniform_index(n));
      bool dup = false;
      for (int k = 0; k < filled; ++k) dup |= (s[k] == c);
      if (!dup) s[filled++] = c;
    }
  }

  struct Score {
    int count = -1;
    Eigen::Matrix3d e;
  };
  const std::vector<Score> scores = map_indices<Score>(
      samples.size(),
      [&](std::size_t h) -> Score {
        Score sc;
        sc.e = solve_eight_point(matches, samples[h].data(), 8, false);
        sc.count = 0;
        for (const auto& m : matches) {
          if (epipolar_residual(sc.e, m) < params.inlier_threshold) ++sc.count;
        }
        return sc;
      },
      params.parallel);

  int best = 0;
  for (std::size_t h = 1; h < scores.size(); ++h) {
    if (scores[h].count > scores[best].count) best = static_cast<int>(h);
  }
  if (scores[best].count < std::max(params.min_inliers, 8)) {
    return Result<EssentialFit>(
        ErrorCode::NoConsensus,
        "best hypothesis has " + std::to_string(scores[best].count) +
            " inliers, need " + std::to_string(std::max(params.min_inliers, 8)));
  }

  EssentialFit fit;
  fit.essential = scores[best].e;
  fit.inliers = inliers_of(fit.essential, matches, params.inlier_threshold);
  for (int round = 0; round < 10; ++round) {
    if (static_cast<int>(fit.inliers.size()) < 8) break;
    const Eigen::Matrix3d e =
        solve_eight_point(matches, fit.inliers.data(),
                          static_cast<int>(fit.inliers.size()), true);
    std::vector<int> next = inliers_of(e, matches, params.inlier_threshold);
    if (static_cast<int>(next.size()) < std::max(params.min_inliers, 8)) break;
    const bool stable = next == fit.inliers;
    fit.essential = e;
    fit.inliers = std::move(next);
    if (stable) break;
  }
  return fit;
}

Result<ScaledMotion> decompose_essential(const Eigen::Matrix3d& essential,
                                         const std::vector<FeatureMatch>& matches,
                                         const std::vector<int>& inliers) {
  if (inliers.empty()) {
    return Result<ScaledMotion>(ErrorCode::InvalidArgument,
                                "cheirality voting needs at least 1 inlier");
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      essential, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d w;
  w << 0, -1, 0, 1, 0, 0, 0, 0, 1;

  Eigen::Matrix3d r1 = u * w * v.transpose();
  if (r1.determinant() < 0.0) r1 = -r1;
  Eigen::Matrix3d r2 = u * w.transpose() * v.transpose();
  if (r2.determinant() < 0.0) r2 = -r2;
  const Eigen::Vector3d t = u.col(2);

  const std::array<std::pair<Eigen::Matrix3d, Eigen::Vector3d>, 4> candidates = {
      {{r1, t}, {r1, -t}, {r2, t}, {r2, -t}}};

  std::array<int, 4> votes{0, 0, 0, 0};
  for (int c = 0; c < 4; ++c) {
    const Eigen::Matrix3d& r = candidates[c].first;
    const Eigen::Vector3d& tc = candidates[c].second;
    for (int i : inliers) {
      Eigen::Matrix<double, 3, 2> a;
      a.col(0) = r * matches[i].ray1;
      a.col(1) = -matches[i].ray2;
      const Eigen::Vector2d depths =
          a.colPivHouseholderQr().solve(-tc);
      if (depths(0) > 0.0 && depths(1) > 0.0) ++votes[c];
    }
  }

  int best = 0;
  for (int c = 1; c < 4; ++c) {
    if (votes[c] > votes[best]) best = c;
  }
  int second = -1;
  for (int c = 0; c < 4; ++c) {
    if (c != best && votes[c] > second) second = votes[c];
  }
  if (votes[best] - second < 2) {
    return Result<ScaledMotion>(
        ErrorCode::CheiralityAmbiguous,
        "depth votes " + std::to_string(votes[best]) + " vs " +
            std::to_string(second) + " cannot separate candidates");
  }

  ScaledMotion out;
  out.rotation = Rotation::from_matrix(candidates[best].first);
  out.direction = candidates[best].second.normalized();
  return out;
}

namespace {

void direction_basis(const Eigen::Vector3d& d, Eigen::Vector3d& e1,
                     Eigen::Vector3d& e2) {
  const Eigen::Vector3d pick =
      std::abs(d.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  e1 = d.cross(pick).normalized();
  e2 = d.cross(e1).normalized();
}

class EpipolarRefineProblem : public TangentProblem {
 public:
  EpipolarRefineProblem(const std::vector<FeatureMatch>& matches,
                        const std::vector<int>& inliers,
                        const ScaledMotion& init)
      : matches_(matches), inliers_(inliers), r_(init.rotation),
        dir_(init.direction.normalized()) {
    direction_basis(dir_, e1_, e2_);
  }

  int tangent_dim() const override { return 5; }
  int block_count() const override { return static_cast<int>(inliers_.size()); }
  int block_dim() const override { return 1; }
  double block_weight(int b) const override {
    return matches_[inliers_[b]].weight;
  }

  void evaluate(const Eigen::VectorXd& delta,
                Eigen::VectorXd& residuals) const override {
    const Eigen::Matrix3d r = (r_ * Rotation::exp(delta.head<3>())).matrix();
    const Eigen::Vector3d d =
        (dir_ + e1_ * delta(3) + e2_ * delta(4)).normalized();
    for (std::size_t b = 0; b < inliers_.size(); ++b) {
      const FeatureMatch& m = matches_[inliers_[b]];
      const Eigen::Vector3d plane_normal = d.cross(r * m.ray1);
      const double norm = plane_normal.norm();
      residuals(b) =
          norm < 1e-12
              ? 0.0
              : std::asin(std::clamp(m.ray2.dot(plane_normal) / norm, -1.0, 1.0));
    }
  }

  void apply_step(const Eigen::VectorXd& delta) override {
    r_ = r_ * Rotation::exp(delta.head<3>());
    dir_ = (dir_ + e1_ * delta(3) + e2_ * delta(4)).normalized();
    direction_basis(dir_, e1_, e2_);
  }

  const Rotation& rotation() const { return r_; }
  const Eigen::Vector3d& direction() const { return dir_; }

 private:
  const std::vector<FeatureMatch>& matches_;
  const std::vector<int>& inliers_;
  Rotation r_;
  Eigen::Vector3d dir_, e1_, e2_;
};

}  // namespace

ScaledMotion refine_epipolar_angular(const std::vector<FeatureMatch>& matches,
                                     const std::vector<int>& inliers,
                                     const ScaledMotion& init,
                                     OptimSummary* summary) {
  EpipolarRefineProblem problem(matches, inliers, init);
  OptimOptions opt;
  opt.loss = RobustLoss::None;
  const OptimSummary s = minimize(problem, opt);
  if (summary) *summary = s;
  ScaledMotion out;
  out.rotation = problem.rotation();
  out.direction = problem.direction();
  out.scale = init.scale;
  return out;
}

}  // namespace motioncal
