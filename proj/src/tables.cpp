#include "motioncal/tables.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "motioncal/file_io.hpp"

namespace motioncal {

namespace {

Error line_error(std::size_t line, const std::string& what) {
  return Error{ErrorCode::ParseError,
               "line " + std::to_string(line) + ": " + what};
}

// Calls row(line_no, values) for every data line; enforces the field count.
template <typename RowFn>
Result<bool> parse_table(const std::string& path, std::size_t fields,
                         RowFn&& row) {
  auto file = read_file(path);
  if (!file.ok()) return file.error();
  std::istringstream in(file.value());
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> values(fields);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first)) continue;
    ss.clear();
    ss.seekg(0);
    for (std::size_t k = 0; k < fields; ++k)
      if (!(ss >> values[k]))
        return line_error(line_no, "expected " + std::to_string(fields) +
                                       " fields");
    std::string extra;
    if (ss >> extra)
      return line_error(line_no, "trailing field '" + extra + "'");
    row(values);
  }
  return true;
}

}  // namespace

Result<std::vector<FeatureMatch>> read_matches(const std::string& path) {
  std::vector<FeatureMatch> matches;
  auto status = parse_table(path, 7, [&](const std::vector<double>& v) {
    FeatureMatch m;
    m.ray1 = {v[0], v[1], v[2]};
    m.ray2 = {v[3], v[4], v[5]};
    m.weight = v[6];
    matches.push_back(m);
  });
  if (!status.ok()) return status.error();
  return matches;
}

Result<bool> write_matches(const std::string& path,
                           const std::vector<FeatureMatch>& matches) {
  std::string out = "# r1x r1y r1z r2x r2y r2z weight\n";
  char buf[256];
  for (const FeatureMatch& m : matches) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                  m.ray1.x(), m.ray1.y(), m.ray1.z(), m.ray2.x(), m.ray2.y(),
                  m.ray2.z(), m.weight);
    out += buf;
  }
  return atomic_write_file(path, out);
}

Result<std::vector<TrackRow>> read_tracks(const std::string& path) {
  std::vector<TrackRow> rows;
  auto status = parse_table(path, 5, [&](const std::vector<double>& v) {
    TrackRow r;
    r.pixel1 = {v[0], v[1]};
    r.pixel2 = {v[2], v[3]};
    r.quality = v[4];
    rows.push_back(r);
  });
  if (!status.ok()) return status.error();
  return rows;
}

Result<bool> write_tracks(const std::string& path,
                          const std::vector<TrackRow>& rows) {
  std::string out = "# u1 v1 u2 v2 quality\n";
  char buf[192];
  for (const TrackRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g\n",
                  r.pixel1.x(), r.pixel1.y(), r.pixel2.x(), r.pixel2.y(),
                  r.quality);
    out += buf;
  }
  return atomic_write_file(path, out);
}

namespace {

struct GridAxis {
  double origin = 0.0;
  double stride = 1.0;
  std::size_t count = 1;
};

Result<GridAxis> infer_axis(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end(),
                           [](double a, double b) {
                             return std::abs(a - b) < 1e-9;
                           }),
               values.end());
  GridAxis axis;
  axis.origin = values.front();
  if (values.size() == 1) return axis;
  double stride = values[1] - values[0];
  for (std::size_t i = 1; i + 1 < values.size(); ++i)
    stride = std::min(stride, values[i + 1] - values[i]);
  axis.stride = stride;
  for (double v : values) {
    double cell = (v - axis.origin) / stride;
    if (std::abs(cell - std::round(cell)) > 1e-6)
      return Error{ErrorCode::InvalidArgument,
                   "track table is not grid-sampled"};
  }
  axis.count =
      static_cast<std::size_t>(
          std::llround((values.back() - axis.origin) / stride)) +
      1;
  return axis;
}

}  // namespace

Result<std::shared_ptr<TableTracker>> TableTracker::build(
    const std::vector<TrackRow>& rows, double discontinuity_gate) {
  if (rows.empty())
    return Error{ErrorCode::InvalidArgument, "empty track table"};

  std::vector<double> us, vs;
  us.reserve(rows.size());
  vs.reserve(rows.size());
  for (const TrackRow& r : rows) {
    us.push_back(r.pixel1.x());
    vs.push_back(r.pixel1.y());
  }
  auto axis_u = infer_axis(std::move(us));
  if (!axis_u.ok()) return axis_u.error();
  auto axis_v = infer_axis(std::move(vs));
  if (!axis_v.ok()) return axis_v.error();

  if (axis_u.value().count * axis_v.value().count > 50'000'000ull)
    return Error{ErrorCode::InvalidArgument, "track table grid too large"};

  auto tracker = std::shared_ptr<TableTracker>(new TableTracker());
  tracker->origin_u_ = axis_u.value().origin;
  tracker->origin_v_ = axis_v.value().origin;
  tracker->stride_u_ = axis_u.value().stride;
  tracker->stride_v_ = axis_v.value().stride;
  tracker->cols_ = axis_u.value().count;
  tracker->rows_ = axis_v.value().count;
  tracker->gate_ = discontinuity_gate > 0.0
                       ? discontinuity_gate
                       : 4.0 * std::max(tracker->stride_u_, tracker->stride_v_);
  tracker->present_.assign(tracker->cols_ * tracker->rows_, 0);
  tracker->cells_.resize(tracker->cols_ * tracker->rows_);

  for (const TrackRow& r : rows) {
    auto iu = static_cast<std::size_t>(
        std::llround((r.pixel1.x() - tracker->origin_u_) / tracker->stride_u_));
    auto iv = static_cast<std::size_t>(
        std::llround((r.pixel1.y() - tracker->origin_v_) / tracker->stride_v_));
    std::size_t cell = iv * tracker->cols_ + iu;
    if (tracker->present_[cell])
      return Error{ErrorCode::InvalidArgument,
                   "duplicate track sample at the same grid cell"};
    tracker->present_[cell] = 1;
    tracker->cells_[cell] = r;
  }
  return tracker;
}

std::optional<Tracker::Track> TableTracker::track(
    const Eigen::Vector2d& pixel1) const {
  double gu = (pixel1.x() - origin_u_) / stride_u_;
  double gv = (pixel1.y() - origin_v_) / stride_v_;
  if (gu < -1e-9 || gv < -1e-9 || gu > cols_ - 1 + 1e-9 ||
      gv > rows_ - 1 + 1e-9)
    return std::nullopt;
  gu = std::clamp(gu, 0.0, static_cast<double>(cols_ - 1));
  gv = std::clamp(gv, 0.0, static_cast<double>(rows_ - 1));

  auto i0 = static_cast<std::size_t>(gu);
  auto j0 = static_cast<std::size_t>(gv);
  double fu = gu - static_cast<double>(i0);
  double fv = gv - static_cast<double>(j0);
  std::size_t i1 = (fu > 1e-9 && i0 + 1 < cols_) ? i0 + 1 : i0;
  std::size_t j1 = (fv > 1e-9 && j0 + 1 < rows_) ? j0 + 1 : j0;
  if (i1 == i0) fu = 0.0;
  if (j1 == j0) fv = 0.0;

  const TrackRow* corner[4];
  std::size_t idx[4] = {j0 * cols_ + i0, j0 * cols_ + i1, j1 * cols_ + i0,
                        j1 * cols_ + i1};
  for (int k = 0; k < 4; ++k) {
    if (!present_[idx[k]]) return std::nullopt;
    corner[k] = &cells_[idx[k]];
  }

  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      if ((corner[a]->pixel2 - corner[b]->pixel2).norm() > gate_)
        return std::nullopt;

  Track t;
  t.pixel = (1 - fu) * (1 - fv) * corner[0]->pixel2 +
            fu * (1 - fv) * corner[1]->pixel2 +
            (1 - fu) * fv * corner[2]->pixel2 + fu * fv * corner[3]->pixel2;
  t.quality = std::min(std::min(corner[0]->quality, corner[1]->quality),
                       std::min(corner[2]->quality, corner[3]->quality));
  return t;
}

}  // namespace motioncal
