#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "motioncal/optim.hpp"
#include "motioncal/rng.hpp"

using namespace motioncal;

namespace {

// 2-parameter line fit y = m x + c, one residual block per sample.
class LineFit : public TangentProblem {
 public:
  LineFit(std::vector<double> xs, std::vector<double> ys)
      : xs_(std::move(xs)), ys_(std::move(ys)) {}

  int tangent_dim() const override { return 2; }
  int block_count() const override { return static_cast<int>(xs_.size()); }
  int block_dim() const override { return 1; }

  void evaluate(const Eigen::VectorXd& delta,
                Eigen::VectorXd& residuals) const override {
    const double m = m_ + delta[0];
    const double c = c_ + delta[1];
    for (std::size_t i = 0; i < xs_.size(); ++i)
      residuals[static_cast<int>(i)] = m * xs_[i] + c - ys_[i];
  }

  void apply_step(const Eigen::VectorXd& delta) override {
    m_ += delta[0];
    c_ += delta[1];
  }

  double m_ = 0.0;
  double c_ = 0.0;

 private:
  std::vector<double> xs_, ys_;
};

// Rosenbrock-style curved valley, a single 2-vector residual block.
class Valley : public TangentProblem {
 public:
  int tangent_dim() const override { return 2; }
  int block_count() const override { return 1; }
  int block_dim() const override { return 2; }

  void evaluate(const Eigen::VectorXd& delta,
                Eigen::VectorXd& residuals) const override {
    const double x = x_ + delta[0];
    const double y = y_ + delta[1];
    residuals[0] = 10.0 * (y - x * x);
    residuals[1] = 1.0 - x;
  }

  void apply_step(const Eigen::VectorXd& delta) override {
    x_ += delta[0];
    y_ += delta[1];
  }

  double x_ = -1.2;
  double y_ = 1.0;
};

}  // namespace

TEST_CASE("least squares line fit reaches the closed form solution") {
  Rng rng(8);
  std::vector<double> xs, ys;
  for (int i = 0; i < 40; ++i) {
    const double x = rng.uniform(-2, 2);
    xs.push_back(x);
    ys.push_back(1.75 * x - 0.4);
  }
  LineFit p(xs, ys);
  const OptimSummary s = minimize(p, OptimOptions{});
  CHECK(s.converged);
  CHECK(s.final_cost <= s.initial_cost);
  CHECK(p.m_ == doctest::Approx(1.75).epsilon(1e-8));
  CHECK(p.c_ == doctest::Approx(-0.4).epsilon(1e-8));
}

TEST_CASE("curved valley converges from the standard start") {
  Valley p;
  OptimOptions opts;
  opts.max_iterations = 200;
  const OptimSummary s = minimize(p, opts);
  CHECK(s.converged);
  CHECK(p.x_ == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(p.y_ == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("zero residual start terminates immediately") {
  LineFit p({0.0, 1.0, 2.0}, {0.5, 0.5, 0.5});
  p.m_ = 0.0;
  p.c_ = 0.5;
  const OptimSummary s = minimize(p, OptimOptions{});
  CHECK(s.initial_cost == doctest::Approx(0.0));
  CHECK(s.final_cost == doctest::Approx(0.0));
  CHECK(s.converged);
}

TEST_CASE("sum of norms resists a gross outlier") {
  // 9 samples on y = x, one sample 10 units off. The median-seeking cost
  // should land on the line; plain least squares gets dragged.
  std::vector<double> xs, ys;
  for (int i = 0; i < 9; ++i) {
    xs.push_back(i * 0.25);
    ys.push_back(i * 0.25);
  }
  xs.push_back(1.0);
  ys.push_back(11.0);

  LineFit l2(xs, ys);
  minimize(l2, OptimOptions{});

  LineFit l1(xs, ys);
  OptimOptions robust;
  robust.loss = RobustLoss::SumOfNorms;
  robust.max_iterations = 300;
  minimize(l1, robust);

  const double l2_err = std::abs(l2.m_ - 1.0) + std::abs(l2.c_);
  const double l1_err = std::abs(l1.m_ - 1.0) + std::abs(l1.c_);
  CHECK(l1_err < 1e-6);
  CHECK(l1_err < 0.01 * l2_err);
}

TEST_CASE("huber with adaptive scale also resists the outlier") {
  std::vector<double> xs, ys;
  for (int i = 0; i < 9; ++i) {
    xs.push_back(i * 0.25);
    ys.push_back(i * 0.25 - 0.1);
  }
  xs.push_back(2.0);
  ys.push_back(-9.0);

  LineFit p(xs, ys);
  OptimOptions opts;
  opts.loss = RobustLoss::Huber;
  opts.adaptive_huber = true;
  opts.max_iterations = 300;
  minimize(p, opts);
  CHECK(p.m_ == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(p.c_ == doctest::Approx(-0.1).epsilon(1e-2));
}

TEST_CASE("block weights bias the solution") {
  class Weighted : public LineFit {
   public:
    using LineFit::LineFit;
    double block_weight(int b) const override { return b == 0 ? 1e6 : 1.0; }
  };
  // Two inconsistent constant observations; the heavy one wins.
  Weighted p({0.0, 0.0}, {2.0, 0.0});
  OptimOptions opts;
  minimize(p, opts);
  CHECK(p.c_ == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("cost trace is non increasing under every loss") {
  for (const RobustLoss loss :
       {RobustLoss::None, RobustLoss::SumOfNorms, RobustLoss::Huber}) {
    Rng rng(19);
    std::vector<double> xs, ys;
    for (int i = 0; i < 30; ++i) {
      const double x = rng.uniform(-1, 1);
      xs.push_back(x);
      ys.push_back(0.3 * x + 0.7 + 0.05 * rng.normal());
    }
    LineFit p(xs, ys);
    OptimOptions opts;
    opts.loss = loss;
    const OptimSummary s = minimize(p, opts);
    CHECK(s.final_cost <= s.initial_cost + 1e-15);
  }
}
