#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "motioncal/camera.hpp"
#include "motioncal/dataset.hpp"
#include "motioncal/geometry.hpp"
#include "motioncal/result.hpp"
#include "motioncal/synthetic.hpp"

namespace motioncal {

// On-disk description of one dataset: N+1 scan files and N motion entries
// (match table, track table) plus the camera model. Paths are relative to
// the manifest file.
struct DatasetManifest {
  std::string dataset_id;
  CameraModel camera;
  std::vector<std::string> scan_files;
  std::vector<std::string> match_files;
  std::vector<std::string> track_files;
  std::vector<std::string> motion_ids;
  std::vector<RigidMotion> lidar_motions;  // empty: pipeline runs ICP
};

Result<DatasetManifest> read_manifest(const std::string& path);
Result<bool> write_manifest(const std::string& path,
                            const DatasetManifest& manifest);

// Reads every referenced file; missing files are IoErrors naming the path.
Result<MotionDataset> load_dataset(const std::string& manifest_path,
                                   std::string* dataset_id = nullptr);

// Sealed ground truth, written next to simulated datasets.
struct OracleFile {
  std::string dataset_id;
  RigidMotion true_extrinsic;
  std::vector<RigidMotion> lidar_motions;
  std::vector<RigidMotion> camera_motions;
  std::vector<std::vector<int>> planted_match_outliers;
  std::uint64_t seed = 0;
};

Result<OracleFile> read_oracle(const std::string& path);
Result<bool> write_oracle(const std::string& path, const OracleRecord& oracle);

// Persists a simulated dataset (scans, matches, grid-sampled tracks,
// manifest, oracle) into a directory. track_stride is the sampling step in
// pixels for the track tables.
Result<bool> save_simulated_dataset(const std::string& directory,
                                    const SimulatedDataset& sim,
                                    int track_stride = 4);

}  // namespace motioncal
