#include "motioncal/optim.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <vector>

namespace motioncal {

namespace {

double huber_rho(double s, double c) {
  return s <= c ? 0.5 * s * s : c * (s - 0.5 * c);
}

double block_norm(const Eigen::VectorXd& r, int b, int bdim) {
  return r.segment(b * bdim, bdim).norm();
}

double robust_cost(const TangentProblem& p, const Eigen::VectorXd& r,
                   RobustLoss loss, double huber) {
  const int bdim = p.block_dim();
  const int bcount = p.block_count();
  double cost = 0.0;
  for (int b = 0; b < bcount; ++b) {
    const double n = block_norm(r, b, bdim);
    const double w = p.block_weight(b);
    switch (loss) {
      case RobustLoss::None: cost += 0.5 * w * n * n; break;
      case RobustLoss::SumOfNorms: cost += w * n; break;
      case RobustLoss::Huber: cost += w * huber_rho(n, huber); break;
    }
  }
  return cost;
}

double irls_weight(double n, RobustLoss loss, double huber) {
  switch (loss) {
    case RobustLoss::None: return 1.0;
    case RobustLoss::SumOfNorms: return 1.0 / std::max(n, 1e-10);
    case RobustLoss::Huber: return n <= huber ? 1.0 : huber / std::max(n, 1e-15);
  }
  return 1.0;
}

double median_block_norm(const Eigen::VectorXd& r, int bcount, int bdim) {
  std::vector<double> norms(bcount);
  for (int b = 0; b < bcount; ++b) norms[b] = block_norm(r, b, bdim);
  const std::size_t mid = norms.size() / 2;
  std::nth_element(norms.begin(), norms.begin() + mid, norms.end());
  return norms[mid];
}

}  // namespace

OptimSummary minimize(TangentProblem& problem, const OptimOptions& options) {
  const int tdim = problem.tangent_dim();
  const int bcount = problem.block_count();
  const int bdim = problem.block_dim();
  const int rdim = bcount * bdim;

  OptimSummary summary;
  if (tdim == 0 || bcount == 0) {
    summary.converged = true;
    return summary;
  }

  Eigen::VectorXd r(rdim), rp(rdim), rm(rdim), rc(rdim);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(tdim);
  problem.evaluate(zero, r);

  double huber = options.huber_scale;
  if (options.loss == RobustLoss::Huber && options.adaptive_huber) {
    huber = std::max(3.0 * median_block_norm(r, bcount, bdim), 1e-12);
  }
  double cost = robust_cost(problem, r, options.loss, huber);
  summary.initial_cost = cost;
  summary.final_cost = cost;

  double lambda = options.initial_lambda;
  Eigen::MatrixXd jac(rdim, tdim);
  Eigen::VectorXd delta(tdim);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    summary.iterations = iter + 1;

    const double h = options.finite_diff_step;
    for (int j = 0; j < tdim; ++j) {
      delta.setZero();
      delta[j] = h;
      problem.evaluate(delta, rp);
      delta[j] = -h;
      problem.evaluate(delta, rm);
      jac.col(j) = (rp - rm) / (2.0 * h);
    }

    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(tdim, tdim);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(tdim);
    for (int b = 0; b < bcount; ++b) {
      const double w = problem.block_weight(b) *
                       irls_weight(block_norm(r, b, bdim), options.loss, huber);
      const auto jb = jac.middleRows(b * bdim, bdim);
      const auto rb = r.segment(b * bdim, bdim);
      hess.noalias() += w * jb.transpose() * jb;
      grad.noalias() += w * jb.transpose() * rb;
    }

    bool accepted = false;
    while (lambda <= 1e10) {
      Eigen::MatrixXd damped = hess;
      damped.diagonal() += lambda * hess.diagonal().cwiseMax(1e-12);
      delta = damped.ldlt().solve(-grad);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      problem.evaluate(delta, rc);
      const double candidate = robust_cost(problem, rc, options.loss, huber);
      if (candidate < cost) {
        problem.apply_step(delta);
        problem.evaluate(zero, r);
        const double new_cost = robust_cost(problem, r, options.loss, huber);
        const double decrease = cost - new_cost;
        cost = new_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (delta.norm() < options.step_tolerance ||
            decrease < options.cost_tolerance * std::max(cost, 1.0)) {
          summary.converged = true;
        }
        break;
      }
      lambda *= 10.0;
    }

    if (options.loss == RobustLoss::Huber && options.adaptive_huber) {
      huber = std::max(3.0 * median_block_norm(r, bcount, bdim), 1e-12);
      cost = robust_cost(problem, r, options.loss, huber);
    }

    if (!accepted) {
      summary.converged = true;
      break;
    }
    if (summary.converged) break;
  }

  summary.final_cost = cost;
  return summary;
}

}  // namespace motioncal
