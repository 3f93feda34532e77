#include "motioncal/manifest.hpp"

#include <cstdio>
#include <filesystem>

#include "json.hpp"
#include "motioncal/file_io.hpp"
#include "motioncal/ply.hpp"
#include "motioncal/tables.hpp"

namespace motioncal {

namespace {

using Json = nlohmann::ordered_json;

Json motion_to_json(const RigidMotion& m) {
  Json j;
  Eigen::Matrix4d mat = m.matrix();
  Json rows = Json::array();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) rows.push_back(mat(r, c));
  j["matrix"] = std::move(rows);
  Eigen::Quaterniond q = m.rotation.quaternion();
  j["quaternion"] = Json::array({q.w(), q.x(), q.y(), q.z()});
  j["translation"] =
      Json::array({m.translation.x(), m.translation.y(), m.translation.z()});
  return j;
}

Result<RigidMotion> motion_from_json(const Json& j) {
  const Json& arr = j.is_object() ? j.at("matrix") : j;
  if (!arr.is_array() || arr.size() != 16)
    return Error{ErrorCode::ParseError, "rigid motion needs 16 matrix values"};
  Eigen::Matrix4d mat;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) mat(r, c) = arr[4 * r + c].get<double>();
  Eigen::Vector4d bottom = mat.row(3).transpose();
  if ((bottom - Eigen::Vector4d(0, 0, 0, 1)).norm() > 1e-9)
    return Error{ErrorCode::ParseError, "matrix bottom row must be 0 0 0 1"};
  RigidMotion m;
  m.rotation = Rotation::from_matrix(mat.topLeftCorner<3, 3>());
  m.translation = mat.topRightCorner<3, 1>();
  return m;
}

Json camera_to_json(const CameraModel& cam) {
  Json j;
  j["kind"] =
      cam.kind == CameraKind::Perspective ? "perspective" : "spherical";
  j["width"] = cam.width;
  j["height"] = cam.height;
  if (cam.kind == CameraKind::Perspective) {
    j["fx"] = cam.fx;
    j["fy"] = cam.fy;
    j["cx"] = cam.cx;
    j["cy"] = cam.cy;
  }
  return j;
}

Result<CameraModel> camera_from_json(const Json& j) {
  std::string kind = j.at("kind").get<std::string>();
  int width = j.at("width").get<int>();
  int height = j.at("height").get<int>();
  if (kind == "spherical") return CameraModel::spherical(width, height);
  if (kind == "perspective")
    return CameraModel::perspective(j.at("fx").get<double>(),
                                    j.at("fy").get<double>(),
                                    j.at("cx").get<double>(),
                                    j.at("cy").get<double>(), width, height);
  return Error{ErrorCode::ParseError, "unknown camera kind '" + kind + "'"};
}

std::string indexed_name(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%03zu.%s", stem, i, ext);
  return buf;
}

}  // namespace

Result<DatasetManifest> read_manifest(const std::string& path) {
  auto file = read_file(path);
  if (!file.ok()) return file.error();
  try {
    Json j = Json::parse(file.value());
    DatasetManifest manifest;
    manifest.dataset_id = j.value("dataset_id", std::string());
    if (j.contains("units")) {
      std::string len = j["units"].value("length", "meters");
      if (len != "meters")
        return Error{ErrorCode::InvalidArgument,
                     "unsupported length unit '" + len + "'"};
    }
    auto cam = camera_from_json(j.at("camera"));
    if (!cam.ok()) return cam.error();
    manifest.camera = cam.value();

    for (const Json& s : j.at("stations"))
      manifest.scan_files.push_back(s.at("scan").get<std::string>());
    for (const Json& m : j.at("motions")) {
      manifest.motion_ids.push_back(m.value("id", std::string()));
      manifest.match_files.push_back(m.at("matches").get<std::string>());
      manifest.track_files.push_back(m.at("tracks").get<std::string>());
    }
    if (manifest.scan_files.size() < 2)
      return Error{ErrorCode::InvalidArgument, "manifest needs >= 2 stations"};
    if (manifest.match_files.size() + 1 != manifest.scan_files.size())
      return Error{ErrorCode::InvalidArgument,
                   "motions must number stations - 1"};
    if (j.contains("lidar_motions")) {
      for (const Json& m : j["lidar_motions"]) {
        auto motion = motion_from_json(m);
        if (!motion.ok()) return motion.error();
        manifest.lidar_motions.push_back(motion.value());
      }
      if (manifest.lidar_motions.size() != manifest.match_files.size())
        return Error{ErrorCode::InvalidArgument,
                     "lidar_motions must number stations - 1"};
    }
    return manifest;
  } catch (const Json::exception& e) {
    return Error{ErrorCode::ParseError, std::string(e.what())};
  }
}

Result<bool> write_manifest(const std::string& path,
                            const DatasetManifest& manifest) {
  Json j;
  j["schema_version"] = 1;
  j["dataset_id"] = manifest.dataset_id;
  j["units"] = Json{{"length", "meters"}, {"angle", "radians"}};
  j["camera"] = camera_to_json(manifest.camera);
  Json stations = Json::array();
  for (const std::string& s : manifest.scan_files)
    stations.push_back(Json{{"scan", s}});
  j["stations"] = std::move(stations);
  Json motions = Json::array();
  for (std::size_t i = 0; i < manifest.match_files.size(); ++i) {
    Json m;
    m["id"] = i < manifest.motion_ids.size() ? manifest.motion_ids[i]
                                             : std::string();
    m["matches"] = manifest.match_files[i];
    m["tracks"] = manifest.track_files[i];
    motions.push_back(std::move(m));
  }
  j["motions"] = std::move(motions);
  if (!manifest.lidar_motions.empty()) {
    Json list = Json::array();
    for (const RigidMotion& m : manifest.lidar_motions)
      list.push_back(motion_to_json(m));
    j["lidar_motions"] = std::move(list);
  }
  return atomic_write_file(path, j.dump(2) + "\n");
}

Result<MotionDataset> load_dataset(const std::string& manifest_path,
                                   std::string* dataset_id) {
  auto manifest = read_manifest(manifest_path);
  if (!manifest.ok()) return manifest.error();
  const DatasetManifest& m = manifest.value();
  if (dataset_id) *dataset_id = m.dataset_id;

  std::filesystem::path base =
      std::filesystem::path(manifest_path).parent_path();
  auto resolve = [&base](const std::string& rel) {
    std::filesystem::path p(rel);
    return (p.is_absolute() ? p : base / p).string();
  };

  MotionDataset dataset;
  dataset.camera = m.camera;
  dataset.motion_ids = m.motion_ids;
  dataset.lidar_motions = m.lidar_motions;

  for (const std::string& rel : m.scan_files) {
    auto cloud = read_point_cloud(resolve(rel));
    if (!cloud.ok()) return cloud.error();
    dataset.scans.push_back(std::move(cloud.value()));
  }
  for (const std::string& rel : m.match_files) {
    auto matches = read_matches(resolve(rel));
    if (!matches.ok()) return matches.error();
    dataset.matches.push_back(std::move(matches.value()));
  }
  for (const std::string& rel : m.track_files) {
    auto rows = read_tracks(resolve(rel));
    if (!rows.ok()) return rows.error();
    auto tracker = TableTracker::build(rows.value());
    if (!tracker.ok())
      return Error{tracker.error().code,
                   rel + ": " + tracker.error().message};
    dataset.trackers.push_back(tracker.value());
  }
  return dataset;
}

Result<OracleFile> read_oracle(const std::string& path) {
  auto file = read_file(path);
  if (!file.ok()) return file.error();
  try {
    Json j = Json::parse(file.value());
    OracleFile oracle;
    oracle.dataset_id = j.value("dataset_id", std::string());
    oracle.seed = j.value("seed", 0ull);
    auto x = motion_from_json(j.at("true_extrinsic"));
    if (!x.ok()) return x.error();
    oracle.true_extrinsic = x.value();
    for (const Json& m : j.at("lidar_motions")) {
      auto motion = motion_from_json(m);
      if (!motion.ok()) return motion.error();
      oracle.lidar_motions.push_back(motion.value());
    }
    for (const Json& m : j.at("camera_motions")) {
      auto motion = motion_from_json(m);
      if (!motion.ok()) return motion.error();
      oracle.camera_motions.push_back(motion.value());
    }
    if (j.contains("planted_match_outliers"))
      for (const Json& list : j["planted_match_outliers"])
        oracle.planted_match_outliers.push_back(
            list.get<std::vector<int>>());
    return oracle;
  } catch (const Json::exception& e) {
    return Error{ErrorCode::ParseError, std::string(e.what())};
  }
}

Result<bool> write_oracle(const std::string& path,
                          const OracleRecord& oracle) {
  Json j;
  j["schema_version"] = 1;
  j["dataset_id"] = oracle.dataset_id;
  j["seed"] = oracle.seed;
  j["true_extrinsic"] = motion_to_json(oracle.true_extrinsic);
  Json lidar = Json::array();
  for (const RigidMotion& m : oracle.lidar_motions)
    lidar.push_back(motion_to_json(m));
  j["lidar_motions"] = std::move(lidar);
  Json cam = Json::array();
  for (const RigidMotion& m : oracle.camera_motions)
    cam.push_back(motion_to_json(m));
  j["camera_motions"] = std::move(cam);
  Json outliers = Json::array();
  for (const auto& list : oracle.planted_match_outliers) outliers.push_back(list);
  j["planted_match_outliers"] = std::move(outliers);
  return atomic_write_file(path, j.dump(2) + "\n");
}

Result<bool> save_simulated_dataset(const std::string& directory,
                                    const SimulatedDataset& sim,
                                    int track_stride) {
  std::filesystem::path dir(directory);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);

  DatasetManifest manifest;
  manifest.dataset_id = sim.oracle.dataset_id;
  manifest.camera = sim.data.camera;
  manifest.motion_ids = sim.data.motion_ids;

  for (std::size_t i = 0; i < sim.data.scans.size(); ++i) {
    std::string name = indexed_name("scan", i, "ply");
    auto w = write_point_cloud((dir / name).string(), sim.data.scans[i]);
    if (!w.ok()) return w.error();
    manifest.scan_files.push_back(name);
  }

  const CameraModel& cam = sim.data.camera;
  int stride = std::max(1, track_stride);
  for (std::size_t i = 0; i < sim.data.motion_count(); ++i) {
    std::string mname = indexed_name("matches", i, "txt");
    auto wm = write_matches((dir / mname).string(), sim.data.matches[i]);
    if (!wm.ok()) return wm.error();
    manifest.match_files.push_back(mname);

    std::vector<TrackRow> rows;
    const Tracker& tracker = *sim.data.trackers[i];
    for (int y = 0; y < cam.height; y += stride) {
      for (int x = 0; x < cam.width; x += stride) {
        Eigen::Vector2d px(x, y);
        auto t = tracker.track(px);
        if (!t) continue;
        TrackRow row;
        row.pixel1 = px;
        row.pixel2 = t->pixel;
        row.quality = t->quality;
        rows.push_back(row);
      }
    }
    std::string tname = indexed_name("tracks", i, "txt");
    auto wt = write_tracks((dir / tname).string(), rows);
    if (!wt.ok()) return wt.error();
    manifest.track_files.push_back(tname);
  }

  auto wman = write_manifest((dir / "manifest.json").string(), manifest);
  if (!wman.ok()) return wman.error();
  return write_oracle((dir / "oracle.json").string(), sim.oracle);
}

}  // namespace motioncal
