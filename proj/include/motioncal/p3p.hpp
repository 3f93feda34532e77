#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "motioncal/geometry.hpp"

namespace motioncal {

// Proper rigid transform mapping src onto dst in least squares
// (dst ~ R src + t).
RigidMotion absolute_orientation(const std::vector<Eigen::Vector3d>& src,
                                 const std::vector<Eigen::Vector3d>& dst);

// Minimal absolute pose: 3 world points against 3 unit bearing rays in the
// camera frame. Returns up to 4 camera-to-world poses; empty on degenerate
// input (collinear points, coincident rays, no positive-depth root).
std::vector<RigidMotion> solve_p3p(const std::array<Eigen::Vector3d, 3>& world,
                                   const std::array<Eigen::Vector3d, 3>& rays);

// Ascending-coefficient polynomial roots via the companion matrix; only
// real roots are returned.
std::vector<double> real_polynomial_roots(const std::vector<double>& coeffs);

}  // namespace motioncal
