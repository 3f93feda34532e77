#include "motioncal/p3p.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

namespace motioncal {

RigidMotion absolute_orientation(const std::vector<Eigen::Vector3d>& src,
                                 const std::vector<Eigen::Vector3d>& dst) {
  Eigen::Vector3d src_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d dst_mean = Eigen::Vector3d::Zero();
  for (const auto& p : src) src_mean += p;
  for (const auto& p : dst) dst_mean += p;
  src_mean /= static_cast<double>(src.size());
  dst_mean /= static_cast<double>(dst.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cov += (dst[i] - dst_mean) * (src[i] - src_mean).transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  const Rotation r = Rotation::from_matrix(svd.matrixU() * d *
                                           svd.matrixV().transpose());
  return RigidMotion{r, dst_mean - r * src_mean};
}

namespace {

std::vector<double> conv(const std::vector<double>& p,
                         const std::vector<double>& q) {
  std::vector<double> out(p.size() + q.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < q.size(); ++j) {
      out[i + j] += p[i] * q[j];
    }
  }
  return out;
}

double poly_eval(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) v = v * x + c[i];
  return v;
}

std::vector<double> poly_derivative(const std::vector<double>& c) {
  std::vector<double> d(c.size() > 1 ? c.size() - 1 : 1, 0.0);
  for (std::size_t i = 1; i < c.size(); ++i) {
    d[i - 1] = c[i] * static_cast<double>(i);
  }
  return d;
}

}  // namespace

std::vector<double> real_polynomial_roots(const std::vector<double>& coeffs) {
  double top = 0.0;
  for (double c : coeffs) top = std::max(top, std::abs(c));
  if (top == 0.0) return {};
  int degree = static_cast<int>(coeffs.size()) - 1;
  while (degree > 0 && std::abs(coeffs[degree]) < 1e-13 * top) --degree;
  if (degree < 1) return {};

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (int i = 0; i < degree; ++i) {
    companion(i, degree - 1) = -coeffs[i] / coeffs[degree];
    if (i > 0) companion(i, i - 1) = 1.0;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, false);

  const std::vector<double> deriv = poly_derivative(coeffs);
  std::vector<double> roots;
  for (int i = 0; i < degree; ++i) {
    const std::complex<double> z = eig.eigenvalues()(i);
    if (std::abs(z.imag()) > 1e-6 * (1.0 + std::abs(z.real()))) continue;
    double x = z.real();
    for (int k = 0; k < 3; ++k) {
      const double f = poly_eval(coeffs, x);
      const double df = poly_eval(deriv, x);
      if (std::abs(df) < 1e-300) break;
      x -= f / df;
    }
    roots.push_back(x);
  }
  return roots;
}

std::vector<RigidMotion> solve_p3p(const std::array<Eigen::Vector3d, 3>& world,
                                   const std::array<Eigen::Vector3d, 3>& rays) {
  const double a = (world[1] - world[2]).norm();
  const double b = (world[0] - world[2]).norm();
  const double c = (world[0] - world[1]).norm();
  if (a < 1e-12 || b < 1e-12 || c < 1e-12) return {};
  const double area2 =
      (world[1] - world[0]).cross(world[2] - world[0]).norm();
  if (area2 < 1e-12 * b * c) return {};  // collinear triple

  const double cos_a = rays[1].dot(rays[2]);
  const double cos_b = rays[0].dot(rays[2]);
  const double cos_g = rays[0].dot(rays[1]);
  if (cos_a > 1.0 - 1e-12 || cos_b > 1.0 - 1e-12 || cos_g > 1.0 - 1e-12) {
    return {};  // coincident bearings
  }

  const double a2 = a * a, b2 = b * b, c2 = c * c;
  // Side-ratio system with u = d2/d1, v = d3/d1:
  //   b2 u^2 - (2 b2 cos_a) u v + (b2 - a2) v^2 + 2 a2 cos_b v - a2 = 0
  //   b2 u^2 - (2 b2 cos_g) u - c2 v^2 + 2 c2 cos_b v + (b2 - c2) = 0
  // Subtracting isolates u = P(v)/L(v); substitution yields a quartic in v.
  const std::vector<double> lp = {-2.0 * b2 * cos_g, 2.0 * b2 * cos_a};
  const std::vector<double> pp = {c2 - a2 - b2, 2.0 * (a2 - c2) * cos_b,
                                  b2 - a2 + c2};
  const std::vector<double> qp = {b2 - c2, 2.0 * c2 * cos_b, -c2};

  std::vector<double> quartic = conv(pp, pp);
  for (auto& q : quartic) q *= b2;
  const std::vector<double> pl = conv(pp, lp);
  const std::vector<double> ql2 = conv(qp, conv(lp, lp));
  for (std::size_t i = 0; i < quartic.size(); ++i) {
    if (i < pl.size()) quartic[i] -= 2.0 * b2 * cos_g * pl[i];
    if (i < ql2.size()) quartic[i] += ql2[i];
  }

  std::vector<RigidMotion> poses;
  for (double v : real_polynomial_roots(quartic)) {
    if (!(v > 0.0)) continue;
    const double lv = poly_eval(lp, v);
    std::vector<double> u_candidates;
    if (std::abs(lv) > 1e-10 * b2) {
      u_candidates.push_back(poly_eval(pp, v) / lv);
    } else {
      // L(v) ~ 0: recover u from the second quadratic directly
      const double disc =
          b2 * b2 * cos_g * cos_g - b2 * poly_eval(qp, v);
      if (disc < 0.0) continue;
      const double s = std::sqrt(disc);
      u_candidates.push_back((b2 * cos_g + s) / b2);
      u_candidates.push_back((b2 * cos_g - s) / b2);
    }
    for (double u : u_candidates) {
      if (!(u > 0.0)) continue;
      const double den1 = 1.0 + v * v - 2.0 * v * cos_b;
      if (den1 <= 0.0) continue;
      const double d1 = b / std::sqrt(den1);
      const double d2 = u * d1;
      const double d3 = v * d1;
      // spurious-root filter on the remaining two distance equations
      const double ra = d2 * d2 + d3 * d3 - 2.0 * d2 * d3 * cos_a - a2;
      const double rc = d1 * d1 + d2 * d2 - 2.0 * d1 * d2 * cos_g - c2;
      const double scale = a2 + b2 + c2;
      if (std::abs(ra) > 1e-6 * scale || std::abs(rc) > 1e-6 * scale) continue;

      const std::vector<Eigen::Vector3d> cam = {d1 * rays[0], d2 * rays[1],
                                                d3 * rays[2]};
      const std::vector<Eigen::Vector3d> wld = {world[0], world[1], world[2]};
      poses.push_back(absolute_orientation(cam, wld));
    }
  }
  return poses;
}

}  // namespace motioncal
