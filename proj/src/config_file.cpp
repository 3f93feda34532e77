#include "motioncal/config_file.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "motioncal/file_io.hpp"

namespace motioncal {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Pulls typed values out of one section, tracking which keys were touched
// so leftovers can be reported as unknown.
class SectionReader {
 public:
  SectionReader(const ConfigSections& all, std::string name)
      : name_(std::move(name)) {
    auto it = all.find(name_);
    if (it != all.end()) section_ = &it->second;
  }

  bool failed() const { return failed_; }
  Error error() const { return error_; }

  void get(const char* key, double* out) {
    const std::string* raw = fetch(key);
    if (!raw) return;
    parse_double(key, *raw, out);
  }

  void get_degrees(const char* key, double* out_radians) {
    double deg = *out_radians * 180.0 / M_PI;
    const std::string* raw = fetch(key);
    if (!raw) return;
    if (parse_double(key, *raw, &deg)) *out_radians = deg * M_PI / 180.0;
  }

  void get(const char* key, int* out) {
    double v = *out;
    const std::string* raw = fetch(key);
    if (!raw) return;
    if (parse_double(key, *raw, &v)) *out = static_cast<int>(std::llround(v));
  }

  void get(const char* key, std::uint64_t* out) {
    const std::string* raw = fetch(key);
    if (!raw) return;
    char* end = nullptr;
    unsigned long long v = std::strtoull(raw->c_str(), &end, 10);
    if (end == raw->c_str() || !trim(end).empty())
      fail(key, *raw, "an unsigned integer");
    else
      *out = v;
  }

  void get(const char* key, bool* out) {
    const std::string* raw = fetch(key);
    if (!raw) return;
    std::string v = trim(*raw);
    if (v == "true" || v == "1" || v == "yes")
      *out = true;
    else if (v == "false" || v == "0" || v == "no")
      *out = false;
    else
      fail(key, *raw, "a boolean");
  }

  void get(const char* key, std::string* out) {
    const std::string* raw = fetch(key);
    if (raw) *out = trim(*raw);
  }

  void get(const char* key, Eigen::Vector3d* out) {
    const std::string* raw = fetch(key);
    if (!raw) return;
    std::istringstream ss(*raw);
    Eigen::Vector3d v;
    if (ss >> v.x() >> v.y() >> v.z())
      *out = v;
    else
      fail(key, *raw, "three numbers");
  }

  Result<bool> finish() {
    if (failed_) return error_;
    if (section_) {
      for (const auto& [key, value] : *section_) {
        if (!consumed_.count(key))
          return Error{ErrorCode::InvalidArgument,
                       "unknown key '" + key + "' in section [" + name_ + "]"};
      }
    }
    return true;
  }

 private:
  const std::string* fetch(const char* key) {
    consumed_.insert(key);
    if (!section_) return nullptr;
    auto it = section_->find(key);
    return it == section_->end() ? nullptr : &it->second;
  }

  bool parse_double(const char* key, const std::string& raw, double* out) {
    char* end = nullptr;
    double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || !trim(end).empty()) {
      fail(key, raw, "a number");
      return false;
    }
    *out = v;
    return true;
  }

  void fail(const char* key, const std::string& raw, const char* expected) {
    if (failed_) return;
    failed_ = true;
    error_ = Error{ErrorCode::InvalidArgument,
                   "key '" + std::string(key) + "' in section [" + name_ +
                       "]: '" + raw + "' is not " + expected};
  }

  std::string name_;
  const ConfigSection* section_ = nullptr;
  std::set<std::string> consumed_;
  bool failed_ = false;
  Error error_{ErrorCode::InvalidArgument, ""};
};

}  // namespace

Result<ConfigSections> parse_config_text(const std::string& text) {
  ConfigSections sections;
  std::istringstream in(text);
  std::string line, current;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        return Error{ErrorCode::ParseError,
                     "line " + std::to_string(line_no) +
                         ": unterminated section header"};
      current = trim(line.substr(1, line.size() - 2));
      sections[current];
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      return Error{ErrorCode::ParseError,
                   "line " + std::to_string(line_no) +
                       ": expected key = value"};
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      return Error{ErrorCode::ParseError,
                   "line " + std::to_string(line_no) + ": empty key"};
    sections[current][key] = value;
  }
  return sections;
}

Result<ConfigSections> read_config_file(const std::string& path) {
  auto file = read_file(path);
  if (!file.ok()) return file.error();
  return parse_config_text(file.value());
}

Result<bool> apply_calibration_config(const ConfigSections& config,
                                      CalibrationConfig* out) {
  {
    SectionReader r(config, "pipeline");
    r.get("max_outer_iterations", &out->max_outer_iterations);
    r.get("rotation_eps", &out->rotation_eps);
    r.get("translation_eps", &out->translation_eps);
    r.get("seed", &out->seed);
    r.get("drop_flagged_pairs", &out->drop_flagged_pairs);
    r.get("parallel", &out->parallel);
    auto done = r.finish();
    if (!done.ok()) return done.error();
  }
  {
    SectionReader r(config, "camera_ransac");
    r.get("iterations", &out->camera_ransac.iterations);
    r.get_degrees("inlier_threshold_deg",
                  &out->camera_ransac.inlier_threshold);
    r.get("min_inliers", &out->camera_ransac.min_inliers);
    auto done = r.finish();
    if (!done.ok()) return done.error();
  }
  {
    SectionReader r(config, "icp");
    r.get("initial_reject_distance", &out->icp.initial_reject_distance);
    r.get("final_reject_distance", &out->icp.final_reject_distance);
    r.get("shrink_factor", &out->icp.shrink_factor);
    r.get("max_iterations", &out->icp.max_iterations);
    r.get("convergence_eps", &out->icp.convergence_eps);
    auto done = r.finish();
    if (!done.ok()) return done.error();
  }
  {
    SectionReader r(config, "correspondences");
    r.get("min_correspondences", &out->correspondences.min_correspondences);
    r.get("cap", &out->correspondences.cap);
    r.get("min_track_quality", &out->correspondences.min_track_quality);
    auto done = r.finish();
    if (!done.ok()) return done.error();
  }
  {
    SectionReader r(config, "p3p");
    r.get("iterations", &out->p3p.iterations);
    r.get_degrees("inlier_threshold_deg", &out->p3p.inlier_threshold);
    r.get("min_inliers", &out->p3p.min_inliers);
    auto done = r.finish();
    if (!done.ok()) return done.error();
  }
  {
    SectionReader r(config, "advisor");
    r.get_degrees("weak_rotation_deg", &out->advisor.weak_rotation_threshold);
    r.get("large_baseline", &out->advisor.large_baseline_threshold);
    auto done = r.finish();
    if (!done.ok()) return done.error();
  }
  return true;
}

Result<bool> apply_scene_spec(const ConfigSections& config, SceneSpec* out) {
  SectionReader r(config, "scene");
  std::string kind;
  r.get("kind", &kind);
  if (!kind.empty()) {
    if (kind == "box-room")
      out->kind = SceneSpec::Kind::BoxRoom;
    else if (kind == "box-room-with-steps")
      out->kind = SceneSpec::Kind::BoxRoomWithStep;
    else
      return Error{ErrorCode::InvalidArgument,
                   "unknown scene kind '" + kind + "'"};
  }
  r.get("dimensions", &out->dimensions);
  r.get("density", &out->density);
  r.get("seed", &out->seed);
  auto done = r.finish();
  if (!done.ok()) return done.error();
  if (out->dimensions.minCoeff() <= 0.0 || out->density < 0.0)
    return Error{ErrorCode::InvalidArgument,
                 "scene dimensions must be positive and density >= 0"};
  return true;
}

Result<bool> apply_trajectory_spec(const ConfigSections& config,
                                   TrajectorySpec* out) {
  SectionReader r(config, "trajectory");
  r.get("n_horizontal", &out->n_horizontal);
  r.get("n_vertical", &out->n_vertical);
  r.get_degrees("rotation_magnitude_deg", &out->rotation_magnitude);
  r.get("translation_magnitude", &out->translation_magnitude);
  r.get("seed", &out->seed);
  auto done = r.finish();
  if (!done.ok()) return done.error();
  if (out->n_horizontal < 0 || out->n_vertical < 0)
    return Error{ErrorCode::InvalidArgument, "motion counts must be >= 0"};
  return true;
}

Result<bool> apply_noise_spec(const ConfigSections& config, NoiseSpec* out) {
  SectionReader r(config, "noise");
  r.get("lidar_range_sigma", &out->lidar_range_sigma);
  r.get("pixel_sigma", &out->pixel_sigma);
  r.get("match_outlier_fraction", &out->match_outlier_fraction);
  r.get("track_outlier_fraction", &out->track_outlier_fraction);
  auto done = r.finish();
  if (!done.ok()) return done.error();
  if (out->lidar_range_sigma < 0.0 || out->pixel_sigma < 0.0 ||
      out->match_outlier_fraction < 0.0 || out->match_outlier_fraction > 1.0 ||
      out->track_outlier_fraction < 0.0 || out->track_outlier_fraction > 1.0)
    return Error{ErrorCode::InvalidArgument,
                 "noise sigmas must be >= 0 and fractions within [0, 1]"};
  return true;
}

Result<bool> apply_extrinsic_spec(const ConfigSections& config,
                                  RigidMotion* out) {
  SectionReader r(config, "extrinsic");
  Eigen::AngleAxisd aa(out->rotation.matrix());
  Eigen::Vector3d axis = aa.axis();
  double angle = aa.angle();
  r.get("rotation_axis", &axis);
  r.get_degrees("rotation_angle_deg", &angle);
  r.get("translation", &out->translation);
  auto done = r.finish();
  if (!done.ok()) return done.error();
  if (axis.norm() < 1e-12)
    return Error{ErrorCode::InvalidArgument, "rotation_axis must be nonzero"};
  out->rotation = Rotation::exp(angle * axis.normalized());
  return true;
}

Result<bool> apply_camera_model(const ConfigSections& config,
                                CameraModel* out) {
  SectionReader r(config, "camera");
  std::string kind;
  r.get("kind", &kind);
  if (!kind.empty()) {
    if (kind == "spherical")
      out->kind = CameraKind::SphericalPanorama;
    else if (kind == "perspective")
      out->kind = CameraKind::Perspective;
    else
      return Error{ErrorCode::InvalidArgument,
                   "unknown camera kind '" + kind + "'"};
  }
  r.get("width", &out->width);
  r.get("height", &out->height);
  r.get("fx", &out->fx);
  r.get("fy", &out->fy);
  r.get("cx", &out->cx);
  r.get("cy", &out->cy);
  auto done = r.finish();
  if (!done.ok()) return done.error();
  if (out->width < 2 || out->height < 2)
    return Error{ErrorCode::InvalidArgument, "camera size must be >= 2x2"};
  return true;
}

}  // namespace motioncal
