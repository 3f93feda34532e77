#pragma once

#include <Eigen/Core>
#include <optional>

namespace motioncal {

// Sparse pixel tracking between one image pair, bound at construction.
// Implementations: file-backed track tables and the synthetic oracle.
class Tracker {
 public:
  struct Track {
    Eigen::Vector2d pixel = Eigen::Vector2d::Zero();  // in image 2
    double quality = 1.0;                             // [0, 1]
  };

  virtual ~Tracker() = default;

  // Follow the pixel from image 1 into image 2; absence means the track
  // was lost. Must be safe to call from multiple threads.
  virtual std::optional<Track> track(const Eigen::Vector2d& pixel1) const = 0;
};

}  // namespace motioncal
