#include "motioncal/handeye.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <sstream>

namespace motioncal {

namespace {

constexpr double kMinAngle = 1e-6;           // rad, axis undefined below
const double kFullWeightAngle = 0.5 * M_PI / 180.0;

double pair_weight(const MotionPair& p) {
  const double a = std::min(p.camera.rotation.angle(), p.lidar.rotation.angle());
  return std::min(a / kFullWeightAngle, 1.0);
}

bool has_rotation(const MotionPair& p) {
  return p.camera.rotation.angle() >= kMinAngle &&
         p.lidar.rotation.angle() >= kMinAngle;
}

std::vector<int> kept_indices(const std::vector<MotionPair>& pairs) {
  std::vector<int> kept;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (has_rotation(pairs[i])) kept.push_back(static_cast<int>(i));
  }
  return kept;
}

struct AxisSystem {
  Eigen::Matrix3d cross_cov = Eigen::Matrix3d::Zero();  // normalized
  Eigen::Vector3d singular_values = Eigen::Vector3d::Zero();
  Eigen::Matrix3d u, v;
};

AxisSystem axis_system(const std::vector<MotionPair>& pairs,
                       const std::vector<int>& kept) {
  AxisSystem sys;
  double total_weight = 0.0;
  for (int i : kept) {
    const auto ka = pairs[i].camera.rotation.axis_angle();
    const auto kb = pairs[i].lidar.rotation.axis_angle();
    if (!ka.ok() || !kb.ok()) continue;
    const double w = pair_weight(pairs[i]);
    sys.cross_cov += w * ka.value().axis * kb.value().axis.transpose();
    total_weight += w;
  }
  if (total_weight > 0.0) sys.cross_cov /= total_weight;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      sys.cross_cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  sys.singular_values = svd.singularValues();
  sys.u = svd.matrixU();
  sys.v = svd.matrixV();
  return sys;
}

class RotationRefineProblem : public TangentProblem {
 public:
  RotationRefineProblem(const std::vector<MotionPair>& pairs,
                        const std::vector<int>& kept, const Rotation& r0)
      : pairs_(pairs), kept_(kept), r_(r0) {
    weights_.reserve(kept.size());
    for (int i : kept) weights_.push_back(pair_weight(pairs[i]));
  }

  int tangent_dim() const override { return 3; }
  int block_count() const override { return static_cast<int>(kept_.size()); }
  int block_dim() const override { return 9; }
  double block_weight(int b) const override { return weights_[b]; }

  void evaluate(const Eigen::VectorXd& delta,
                Eigen::VectorXd& residuals) const override {
    const Eigen::Matrix3d r = (r_ * Rotation::exp(delta)).matrix();
    for (std::size_t b = 0; b < kept_.size(); ++b) {
      const MotionPair& p = pairs_[kept_[b]];
      const Eigen::Matrix3d gap =
          p.camera.rotation.matrix() * r - r * p.lidar.rotation.matrix();
      residuals.segment<9>(9 * b) =
          Eigen::Map<const Eigen::Matrix<double, 9, 1>>(gap.data());
    }
  }

  void apply_step(const Eigen::VectorXd& delta) override {
    r_ = r_ * Rotation::exp(delta);
  }

  const Rotation& rotation() const { return r_; }

 private:
  const std::vector<MotionPair>& pairs_;
  const std::vector<int>& kept_;
  std::vector<double> weights_;
  Rotation r_;
};

class TranslationRefineProblem : public TangentProblem {
 public:
  TranslationRefineProblem(const std::vector<MotionPair>& pairs,
                           const std::vector<int>& kept, const Rotation& r,
                           const Eigen::Vector3d& t0)
      : pairs_(pairs), kept_(kept), r_(r.matrix()), t_(t0) {}

  int tangent_dim() const override { return 3; }
  int block_count() const override { return static_cast<int>(kept_.size()); }
  int block_dim() const override { return 3; }

  void evaluate(const Eigen::VectorXd& delta,
                Eigen::VectorXd& residuals) const override {
    const Eigen::Vector3d t = t_ + delta;
    for (std::size_t b = 0; b < kept_.size(); ++b) {
      const MotionPair& p = pairs_[kept_[b]];
      const Eigen::Vector3d ta =
          p.camera.direction * p.camera.scale.value_or(0.0);
      residuals.segment<3>(3 * b) = (p.camera.rotation.matrix() * t + ta) -
                                    (r_ * p.lidar.translation + t);
    }
  }

  void apply_step(const Eigen::VectorXd& delta) override { t_ += delta; }

  const Eigen::Vector3d& translation() const { return t_; }

 private:
  const std::vector<MotionPair>& pairs_;
  const std::vector<int>& kept_;
  Eigen::Matrix3d r_;
  Eigen::Vector3d t_;
};

OptimOptions refine_options(RobustLoss loss) {
  OptimOptions opt;
  opt.loss = loss;
  opt.max_iterations = 100;
  opt.step_tolerance = 1e-12;
  opt.cost_tolerance = 1e-12;
  return opt;
}

}  // namespace

Result<Rotation> solve_rotation_linear(const std::vector<MotionPair>& pairs) {
  const std::vector<int> kept = kept_indices(pairs);
  if (kept.size() < 2) {
    return Result<Rotation>(ErrorCode::InsufficientPairs,
                            "need at least 2 pairs with rotation, have " +
                                std::to_string(kept.size()));
  }
  const AxisSystem sys = axis_system(pairs, kept);
  if (sys.singular_values(1) <= 1e-3) {
    return Result<Rotation>(
        ErrorCode::DegenerateAxes,
        "rotation axes span a single direction (second singular value " +
            std::to_string(sys.singular_values(1)) + ")");
  }
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (sys.u * sys.v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return Rotation::from_matrix(sys.u * d * sys.v.transpose());
}

Rotation refine_rotation(const std::vector<MotionPair>& pairs,
                         const Rotation& r0, OptimSummary* summary) {
  const std::vector<int> kept = kept_indices(pairs);
  RotationRefineProblem problem(pairs, kept, r0);
  const OptimSummary s = minimize(problem, refine_options(RobustLoss::SumOfNorms));
  if (summary) *summary = s;
  return problem.rotation();
}

Result<TranslationSolution> solve_translation_scales(
    const std::vector<MotionPair>& pairs, const Rotation& r) {
  const std::vector<int> kept = kept_indices(pairs);
  const int k = static_cast<int>(kept.size());
  if (k < 2) {
    return Result<TranslationSolution>(
        ErrorCode::InsufficientPairs,
        "need at least 2 pairs with rotation, have " + std::to_string(k));
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3 * k, 3 + k);
  Eigen::VectorXd b(3 * k);
  for (int j = 0; j < k; ++j) {
    const MotionPair& p = pairs[kept[j]];
    a.block<3, 3>(3 * j, 0) =
        p.camera.rotation.matrix() - Eigen::Matrix3d::Identity();
    a.block<3, 1>(3 * j, 3 + j) = p.camera.direction;
    b.segment<3>(3 * j) = r.matrix() * p.lidar.translation;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      a, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double tol = 1e-8 * std::max(sv(0), 1.0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) ++rank;
  }
  if (rank < 3 + k) {
    std::ostringstream msg;
    msg << "translation system rank " << rank << " < " << 3 + k
        << "; unobservable:";
    const Eigen::MatrixXd& v = svd.matrixV();
    bool t_named = false;
    std::vector<bool> s_named(k, false);
    for (int col = rank; col < 3 + k; ++col) {
      for (int row = 0; row < 3 + k; ++row) {
        if (std::abs(v(row, col)) < 1e-6) continue;
        if (row < 3 && !t_named) {
          msg << " t";
          t_named = true;
        } else if (row >= 3 && !s_named[row - 3]) {
          msg << " s[" << row - 3 << "]";
          s_named[row - 3] = true;
        }
      }
    }
    return Result<TranslationSolution>(ErrorCode::RankDeficient, msg.str());
  }

  const Eigen::VectorXd x = svd.solve(b);
  TranslationSolution sol;
  sol.t = x.head<3>();
  sol.scales.assign(pairs.size(), 0.0);
  sol.scale_reliable.assign(pairs.size(), false);
  for (int j = 0; j < k; ++j) {
    sol.scales[kept[j]] = x(3 + j);
    sol.scale_reliable[kept[j]] = x(3 + j) > 1e-6;
  }
  return sol;
}

Eigen::Vector3d refine_translation(const std::vector<MotionPair>& pairs,
                                   const Rotation& r, const Eigen::Vector3d& t0,
                                   OptimSummary* summary) {
  const std::vector<int> kept = kept_indices(pairs);
  TranslationRefineProblem problem(pairs, kept, r, t0);
  const OptimSummary s = minimize(problem, refine_options(RobustLoss::SumOfNorms));
  if (summary) *summary = s;
  return problem.translation();
}

namespace {

Result<Eigen::Vector3d> solve_translation_scaled(
    const std::vector<MotionPair>& pairs, const std::vector<int>& kept,
    const Rotation& r) {
  const int k = static_cast<int>(kept.size());
  Eigen::MatrixXd a(3 * k, 3);
  Eigen::VectorXd b(3 * k);
  for (int j = 0; j < k; ++j) {
    const MotionPair& p = pairs[kept[j]];
    if (!p.camera.scale.has_value()) {
      return Result<Eigen::Vector3d>(
          ErrorCode::InvalidArgument,
          "scaled calibration requires a scale on every camera motion (pair " +
              p.id + " has none)");
    }
    a.block<3, 3>(3 * j, 0) =
        p.camera.rotation.matrix() - Eigen::Matrix3d::Identity();
    b.segment<3>(3 * j) = r.matrix() * p.lidar.translation -
                          p.camera.direction * *p.camera.scale;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues()(2) <= 1e-8 * std::max(svd.singularValues()(0), 1.0)) {
    return Result<Eigen::Vector3d>(
        ErrorCode::RankDeficient,
        "translation unobservable along the common rotation axis");
  }
  return Eigen::Vector3d(svd.solve(b));
}

}  // namespace

Result<Extrinsic> calibrate(const std::vector<MotionPair>& pairs,
                            CalibrationMode mode) {
  const std::vector<int> kept = kept_indices(pairs);
  if (kept.size() < 2) {
    return Result<Extrinsic>(ErrorCode::InsufficientPairs,
                             "need at least 2 pairs with rotation, have " +
                                 std::to_string(kept.size()));
  }

  auto r_linear = solve_rotation_linear(pairs);
  if (!r_linear.ok()) return Result<Extrinsic>(r_linear.error());
  const Rotation r = refine_rotation(pairs, r_linear.value());

  Extrinsic out;
  out.transform.rotation = r;
  out.scales.assign(pairs.size(), 0.0);
  out.scale_reliable.assign(pairs.size(), false);

  if (mode == CalibrationMode::Scaleless) {
    auto sol = solve_translation_scales(pairs, r);
    if (!sol.ok()) return Result<Extrinsic>(sol.error());
    out.transform.translation = sol.value().t;
    out.scales = sol.value().scales;
    out.scale_reliable = sol.value().scale_reliable;
  } else {
    auto t0 = solve_translation_scaled(pairs, kept, r);
    if (!t0.ok()) return Result<Extrinsic>(t0.error());
    out.transform.translation = refine_translation(pairs, r, t0.value());
    for (int i : kept) {
      out.scales[i] = *pairs[i].camera.scale;
      out.scale_reliable[i] = true;
    }
  }

  const AxisSystem sys = axis_system(pairs, kept);
  out.condition = sys.singular_values(2);

  double rot_sq = 0.0;
  double trans_sq = 0.0;
  for (int i : kept) {
    const MotionPair& p = pairs[i];
    const Rotation gap =
        (p.camera.rotation * r) * (r * p.lidar.rotation).inverse();
    rot_sq += gap.angle() * gap.angle();
    const Eigen::Vector3d ta = p.camera.direction * out.scales[i];
    const Eigen::Vector3d res =
        (p.camera.rotation.matrix() * out.transform.translation + ta) -
        (r.matrix() * p.lidar.translation + out.transform.translation);
    trans_sq += res.squaredNorm();
  }
  out.rotation_residual = std::sqrt(rot_sq / kept.size());
  out.translation_residual = std::sqrt(trans_sq / kept.size());
  return out;
}

}  // namespace motioncal
