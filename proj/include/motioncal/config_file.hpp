#pragma once

#include <map>
#include <string>

#include "motioncal/camera.hpp"
#include "motioncal/pipeline.hpp"
#include "motioncal/result.hpp"
#include "motioncal/synthetic.hpp"

namespace motioncal {

// Line-oriented "key = value" text grouped into [section] blocks; '#'
// starts a comment. Values with several numbers are whitespace-separated.
using ConfigSection = std::map<std::string, std::string>;
using ConfigSections = std::map<std::string, ConfigSection>;

Result<ConfigSections> parse_config_text(const std::string& text);
Result<ConfigSections> read_config_file(const std::string& path);

// Each applier consumes its own sections, leaves absent keys at their
// defaults, and rejects unknown keys inside the sections it owns. Angles
// in config files are degrees (keys say so); the structs keep radians.
Result<bool> apply_calibration_config(const ConfigSections& config,
                                      CalibrationConfig* out);
Result<bool> apply_scene_spec(const ConfigSections& config, SceneSpec* out);
Result<bool> apply_trajectory_spec(const ConfigSections& config,
                                   TrajectorySpec* out);
Result<bool> apply_noise_spec(const ConfigSections& config, NoiseSpec* out);
Result<bool> apply_camera_model(const ConfigSections& config,
                                CameraModel* out);
// [extrinsic]: rotation_axis (3 numbers), rotation_angle_deg, translation.
Result<bool> apply_extrinsic_spec(const ConfigSections& config,
                                  RigidMotion* out);

}  // namespace motioncal
