#pragma once

#include <Eigen/Core>

namespace motioncal {

enum class RobustLoss {
  None,        // 0.5 Σ w_b |r_b|²
  SumOfNorms,  // Σ w_b |r_b|, via iterative reweighting
  Huber,       // Σ w_b ρ_c(|r_b|)
};

struct OptimOptions {
  int max_iterations = 100;
  double initial_lambda = 1e-4;
  double step_tolerance = 1e-12;
  double cost_tolerance = 1e-12;
  double finite_diff_step = 1e-6;
  RobustLoss loss = RobustLoss::None;
  double huber_scale = 1.0;
  // Recompute huber_scale = max(3 * median block norm, 1e-12) at each
  // accepted state.
  bool adaptive_huber = false;
};

// Least-squares problem over a manifold with a local tangent
// parameterization. Residuals come in equally sized blocks; robust losses
// act on block norms.
class TangentProblem {
 public:
  virtual ~TangentProblem() = default;
  virtual int tangent_dim() const = 0;
  virtual int block_count() const = 0;
  virtual int block_dim() const = 0;
  // Stack all residual blocks at (current state ⊞ delta). Must not mutate
  // the state. residuals has block_count*block_dim rows on entry.
  virtual void evaluate(const Eigen::VectorXd& delta,
                        Eigen::VectorXd& residuals) const = 0;
  // Commit delta into the state.
  virtual void apply_step(const Eigen::VectorXd& delta) = 0;
  // Fixed per-block weight (data confidence), independent of the state.
  virtual double block_weight(int) const { return 1.0; }
};

struct OptimSummary {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
};

// Levenberg-Marquardt with numeric central-difference Jacobians and
// per-block IRLS weights. Steps are accepted only when the true robust
// cost decreases, so the cost trace is strictly non-increasing.
OptimSummary minimize(TangentProblem& problem, const OptimOptions& options);

}  // namespace motioncal
