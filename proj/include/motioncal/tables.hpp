#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

#include "motioncal/epipolar.hpp"
#include "motioncal/result.hpp"
#include "motioncal/tracker.hpp"

namespace motioncal {

// Text tables, one record per line, '#' starts a comment. Matches carry
// 7 fields (two unit rays + weight), tracks carry 5 (two pixels +
// quality). A malformed record is an error naming its line, never a skip.

Result<std::vector<FeatureMatch>> read_matches(const std::string& path);
Result<bool> write_matches(const std::string& path,
                           const std::vector<FeatureMatch>& matches);

struct TrackRow {
  Eigen::Vector2d pixel1 = Eigen::Vector2d::Zero();
  Eigen::Vector2d pixel2 = Eigen::Vector2d::Zero();
  double quality = 1.0;
};

Result<std::vector<TrackRow>> read_tracks(const std::string& path);
Result<bool> write_tracks(const std::string& path,
                          const std::vector<TrackRow>& rows);

// Tracker over a table sampled on a regular pixel grid in image 1.
// Queries interpolate the four surrounding samples bilinearly; a query
// fails when any sample is missing or when the four targets disagree by
// more than the discontinuity gate (a depth edge crossed the cell).
class TableTracker : public Tracker {
 public:
  // gate <= 0 picks 4x the inferred grid stride.
  static Result<std::shared_ptr<TableTracker>> build(
      const std::vector<TrackRow>& rows, double discontinuity_gate = 0.0);

  std::optional<Track> track(const Eigen::Vector2d& pixel1) const override;

 private:
  TableTracker() = default;

  double origin_u_ = 0.0, origin_v_ = 0.0;
  double stride_u_ = 1.0, stride_v_ = 1.0;
  double gate_ = 0.0;
  std::size_t cols_ = 0, rows_ = 0;
  std::vector<char> present_;
  std::vector<TrackRow> cells_;
};

}  // namespace motioncal
