#include <cinttypes>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "motioncal/config_file.hpp"
#include "motioncal/manifest.hpp"
#include "motioncal/pipeline.hpp"
#include "motioncal/report.hpp"
#include "motioncal/rng.hpp"
#include "motioncal/synthetic.hpp"

namespace {

using namespace motioncal;

constexpr int kExitUsage = 64;
constexpr int kExitIo = 66;

int exit_code_for(const Error& error) {
  std::fprintf(stderr, "error: %s (%s)\n", error.message.c_str(),
               error_code_name(error.code));
  return error.code == ErrorCode::IoError ? kExitIo : 1;
}

RigidMotion default_extrinsic() {
  RigidMotion x;
  x.rotation =
      Rotation::exp(10.0 * M_PI / 180.0 * Eigen::Vector3d(1, 2, 3).normalized());
  x.translation = Eigen::Vector3d(0.2, 0.05, 0.1);
  return x;
}

int run_calibrate(const std::string& manifest_path,
                  const std::string& config_path, const std::string& out_path) {
  CalibrationConfig config;
  if (!config_path.empty()) {
    auto sections = read_config_file(config_path);
    if (!sections.ok()) return exit_code_for(sections.error());
    auto applied = apply_calibration_config(sections.value(), &config);
    if (!applied.ok()) return exit_code_for(applied.error());
  }

  std::string dataset_id;
  auto dataset = load_dataset(manifest_path, &dataset_id);
  if (!dataset.ok()) return exit_code_for(dataset.error());

  auto result = run_calibration(dataset.value(), config);
  if (!result.ok()) return exit_code_for(result.error());
  const CalibrationReport& report = result.value();

  auto written = write_report(out_path, report, dataset_id);
  if (!written.ok()) return exit_code_for(written.error());

  const char* status = report.status == PipelineStatus::Converged
                           ? "converged"
                           : report.status == PipelineStatus::MaxIterations
                                 ? "max_iterations"
                                 : "failed";
  std::printf("status: %s after %zu iterations, report written to %s\n",
              status, report.per_iteration.size() - 1, out_path.c_str());
  if (!report.failure_reason.empty())
    std::printf("reason: %s\n", report.failure_reason.c_str());
  for (const std::string& w : report.warnings)
    std::printf("warning: %s\n", w.c_str());

  switch (report.status) {
    case PipelineStatus::Converged:
      return 0;
    case PipelineStatus::MaxIterations:
      return 2;
    case PipelineStatus::Failed:
      return 1;
  }
  return 1;
}

int run_simulate(const std::string& scene_path, const std::string& traj_path,
                 const std::string& noise_path, std::uint64_t seed,
                 const std::string& out_dir) {
  SceneSpec scene_spec;
  TrajectorySpec trajectory;
  NoiseSpec noise;
  CameraModel camera = CameraModel::spherical(2048, 1024);
  RigidMotion extrinsic = default_extrinsic();
  scene_spec.seed = mix64(seed, 1);
  trajectory.seed = mix64(seed, 2);

  if (!scene_path.empty()) {
    auto sections = read_config_file(scene_path);
    if (!sections.ok()) return exit_code_for(sections.error());
    auto s = apply_scene_spec(sections.value(), &scene_spec);
    if (!s.ok()) return exit_code_for(s.error());
    auto c = apply_camera_model(sections.value(), &camera);
    if (!c.ok()) return exit_code_for(c.error());
    auto x = apply_extrinsic_spec(sections.value(), &extrinsic);
    if (!x.ok()) return exit_code_for(x.error());
  }
  if (!traj_path.empty()) {
    auto sections = read_config_file(traj_path);
    if (!sections.ok()) return exit_code_for(sections.error());
    auto t = apply_trajectory_spec(sections.value(), &trajectory);
    if (!t.ok()) return exit_code_for(t.error());
  }
  if (!noise_path.empty()) {
    auto sections = read_config_file(noise_path);
    if (!sections.ok()) return exit_code_for(sections.error());
    auto nn = apply_noise_spec(sections.value(), &noise);
    if (!nn.ok()) return exit_code_for(nn.error());
  }

  Scene scene = generate_scene(scene_spec);
  SimulatedDataset sim =
      simulate_dataset(scene, trajectory, extrinsic, camera, noise, seed);
  auto saved = save_simulated_dataset(out_dir, sim);
  if (!saved.ok()) return exit_code_for(saved.error());

  std::printf("dataset %s: %zu stations, %zu motions, %zu scene points\n",
              sim.oracle.dataset_id.c_str(), sim.data.scans.size(),
              sim.data.motion_count(), scene.cloud.size());
  std::printf("wrote %s/manifest.json and oracle.json\n", out_dir.c_str());
  return 0;
}

int run_eval(const std::vector<std::string>& report_paths,
             const std::vector<std::string>& oracle_paths,
             const std::string& out_path) {
  std::vector<LoadedReport> reports;
  for (const std::string& path : report_paths) {
    auto loaded = read_report(path);
    if (!loaded.ok()) return exit_code_for(loaded.error());
    reports.push_back(std::move(loaded.value()));
  }
  std::vector<OracleFile> oracles;
  for (const std::string& path : oracle_paths) {
    auto oracle = read_oracle(path);
    if (!oracle.ok()) return exit_code_for(oracle.error());
    oracles.push_back(std::move(oracle.value()));
  }

  auto written = write_eval_csv(out_path, reports, oracles);
  if (!written.ok()) return exit_code_for(written.error());

  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (const OracleFile& oracle : oracles) {
      if (oracle.dataset_id != reports[i].dataset_id) continue;
      auto [rot, trans] = evaluate_extrinsic(
          reports[i].report.extrinsic.transform, oracle.true_extrinsic);
      std::printf(
          "report %zu: rotation error %.6g deg, translation error %.6g m\n", i,
          rot, trans);
      break;
    }
  }
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int run_diagnose(const std::string& manifest_path,
                 const std::string& config_path) {
  CalibrationConfig config;
  if (!config_path.empty()) {
    auto sections = read_config_file(config_path);
    if (!sections.ok()) return exit_code_for(sections.error());
    auto applied = apply_calibration_config(sections.value(), &config);
    if (!applied.ok()) return exit_code_for(applied.error());
  }

  auto dataset = load_dataset(manifest_path);
  if (!dataset.ok()) return exit_code_for(dataset.error());

  std::vector<std::string> warnings;
  auto pairs = estimate_motion_pairs(dataset.value(), config, &warnings);
  if (!pairs.ok()) return exit_code_for(pairs.error());
  for (const std::string& w : warnings)
    std::printf("warning: %s\n", w.c_str());

  std::printf("%-12s %12s %12s %14s  %s\n", "motion", "rotation_deg",
              "gain", "translation_m", "flags");
  for (const MotionDiagnostic& d :
       motion_advisor(pairs.value(), config.advisor)) {
    std::string flags;
    if (d.weak_rotation) flags += "WEAK_ROTATION ";
    if (d.large_baseline) flags += "LARGE_BASELINE";
    std::printf("%-12s %12.4f %12.4f %14.4f  %s\n", d.id.c_str(),
                d.rotation_angle * 180.0 / M_PI, d.propagation_gain,
                d.translation_magnitude, flags.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camera-LiDAR extrinsic calibration from synchronized motions"};
  app.require_subcommand(1);

  auto* cal = app.add_subcommand("calibrate", "Run the calibration pipeline");
  std::string cal_manifest, cal_config, cal_out = "report.json";
  cal->add_option("--manifest", cal_manifest, "Dataset manifest JSON")
      ->required();
  cal->add_option("--config", cal_config, "Solver config file");
  cal->add_option("--out", cal_out, "Report output path");

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  std::string sim_scene, sim_traj, sim_noise, sim_out = "dataset";
  std::uint64_t sim_seed = 0;
  sim->add_option("--scene", sim_scene,
                  "Scene spec file ([scene], [camera], [extrinsic])");
  sim->add_option("--trajectory", sim_traj, "Trajectory spec file");
  sim->add_option("--noise", sim_noise, "Noise spec file");
  sim->add_option("--seed", sim_seed, "Master seed");
  sim->add_option("--out", sim_out, "Output directory");

  auto* ev = app.add_subcommand("eval", "Error curves against an oracle");
  std::vector<std::string> ev_reports, ev_oracles;
  std::string ev_out = "curves.csv";
  ev->add_option("--report", ev_reports, "Report JSON (repeatable)")
      ->required();
  ev->add_option("--oracle", ev_oracles, "Oracle JSON (repeatable)")
      ->required();
  ev->add_option("--out", ev_out, "CSV output path");

  auto* diag = app.add_subcommand("diagnose", "Motion quality table");
  std::string diag_manifest, diag_config;
  diag->add_option("--manifest", diag_manifest, "Dataset manifest JSON")
      ->required();
  diag->add_option("--config", diag_config, "Solver config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (cal->parsed()) return run_calibrate(cal_manifest, cal_config, cal_out);
  if (sim->parsed())
    return run_simulate(sim_scene, sim_traj, sim_noise, sim_seed, sim_out);
  if (ev->parsed()) return run_eval(ev_reports, ev_oracles, ev_out);
  if (diag->parsed()) return run_diagnose(diag_manifest, diag_config);
  return kExitUsage;
}
