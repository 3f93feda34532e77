#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "motioncal/kdtree.hpp"
#include "motioncal/parallel.hpp"
#include "motioncal/result.hpp"
#include "motioncal/rng.hpp"

using namespace motioncal;

TEST_CASE("rng streams are reproducible") {
  Rng a(1234), b(1234), c(1235);
  bool all_equal = true;
  bool any_differ = false;
  for (int i = 0; i < 1000; ++i) {
    const uint64_t va = a.next_u64();
    all_equal = all_equal && (va == b.next_u64());
    any_differ = any_differ || (va != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_differ);
}

TEST_CASE("rng child streams depend only on seed and tag") {
  Rng root(99);
  Rng c1 = root.child(7);
  root.next_u64();
  Rng c2 = root.child(7);
  CHECK(c1.next_u64() == c2.next_u64());
  CHECK(root.child(7).seed() != root.child(8).seed());
}

TEST_CASE("uniform variates stay in range") {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.uniform(-3.0, 2.0);
    CHECK(v >= -3.0);
    CHECK(v < 2.0);
    CHECK(rng.uniform_index(17) < 17);
  }
}

TEST_CASE("normal variates have standard moments") {
  Rng rng(31);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("mix64 separates nearby inputs") {
  CHECK(mix64(0) != mix64(1));
  CHECK(mix64(1, 2) != mix64(2, 1));
  CHECK(hash_doubles(1, 0.5, 0.25) == hash_doubles(1, 0.5, 0.25));
  CHECK(hash_doubles(1, 0.5, 0.25) != hash_doubles(2, 0.5, 0.25));
  CHECK(hash_doubles(1, 0.5, 0.25) != hash_doubles(1, 0.25, 0.5));
}

TEST_CASE("map_indices matches the serial loop bit for bit") {
  const std::size_t n = 4096;
  const auto f = [](std::size_t i) {
    return std::sin(0.001 * static_cast<double>(i)) * mix64(i);
  };
  const auto par = map_indices<double>(n, f, true);
  const auto ser = map_indices<double>(n, f, false);
  REQUIRE(par.size() == n);
  CHECK(std::memcmp(par.data(), ser.data(), n * sizeof(double)) == 0);
}

TEST_CASE("kdtree nearest matches brute force") {
  Rng rng(77);
  std::vector<Eigen::Vector3d> pts(500);
  for (auto& p : pts) p = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  const KdTree tree(pts);
  REQUIRE(tree.size() == pts.size());

  for (int q = 0; q < 200; ++q) {
    const Eigen::Vector3d query(rng.normal(), rng.normal(), rng.normal());
    int best = -1;
    double best_d = 1e300;
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
      const double d = (pts[i] - query).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    double d = 0.0;
    const int got = tree.nearest(query, &d);
    CHECK(got == best);
    CHECK(d == doctest::Approx(best_d).epsilon(1e-12));
  }
}

TEST_CASE("kdtree knn is sorted and complete") {
  Rng rng(78);
  std::vector<Eigen::Vector3d> pts(200);
  for (auto& p : pts) p = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  const KdTree tree(pts);

  const Eigen::Vector3d query(0.1, -0.2, 0.3);
  const auto got = tree.knn(query, 10);
  REQUIRE(got.size() == 10);

  std::vector<int> idx(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) idx[i] = static_cast<int>(i);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return (pts[a] - query).squaredNorm() < (pts[b] - query).squaredNorm();
  });
  for (int i = 0; i < 10; ++i) CHECK(got[i] == idx[i]);
}

TEST_CASE("kdtree handles the empty cloud") {
  const KdTree tree(std::vector<Eigen::Vector3d>{});
  double d = 0.0;
  CHECK(tree.nearest(Eigen::Vector3d::Zero(), &d) == -1);
  CHECK(tree.knn(Eigen::Vector3d::Zero(), 3).empty());
}

TEST_CASE("result carries values and errors") {
  const Result<int> good(41);
  REQUIRE(good.ok());
  CHECK(good.value() == 41);

  const Result<int> bad(ErrorCode::InvalidArgument, "nope");
  REQUIRE(!bad.ok());
  CHECK(bad.code() == ErrorCode::InvalidArgument);
  CHECK(bad.error().message == "nope");
  CHECK(std::string(error_code_name(ErrorCode::InvalidArgument)) ==
        "InvalidArgument");
}
