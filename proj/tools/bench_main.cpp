#include <chrono>
#include <cstdio>
#include <functional>

#include "motioncal/epipolar.hpp"
#include "motioncal/fusion.hpp"
#include "motioncal/icp.hpp"
#include "motioncal/parallel.hpp"
#include "motioncal/synthetic.hpp"

namespace {

using namespace motioncal;

double time_ms(const std::function<void()>& fn) {
  auto start = std::chrono::steady_clock::now();
  fn();
  auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count();
}

void report(const char* name, double serial_ms, double parallel_ms,
            bool identical) {
  std::printf("%-24s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   %s\n",
              name, serial_ms, parallel_ms, serial_ms / parallel_ms,
              identical ? "outputs identical" : "OUTPUTS DIFFER");
}

bool same_vectors(const std::vector<Eigen::Vector3d>& a,
                  const std::vector<Eigen::Vector3d>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].x() != b[i].x() || a[i].y() != b[i].y() || a[i].z() != b[i].z())
      return false;
  return true;
}

bool same_matrix(const Eigen::Matrix4d& a, const Eigen::Matrix4d& b) {
  return (a - b).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

int main() {
  std::printf("threads available: %u\n\n", hardware_threads());

  SceneSpec scene_spec;
  scene_spec.density = 150.0;
  scene_spec.seed = 7;
  Scene scene = generate_scene(scene_spec);

  TrajectorySpec trajectory;
  trajectory.seed = 11;
  RigidMotion extrinsic;
  extrinsic.rotation =
      Rotation::exp(10.0 * M_PI / 180.0 * Eigen::Vector3d(1, 2, 3).normalized());
  extrinsic.translation = Eigen::Vector3d(0.2, 0.05, 0.1);
  CameraModel cam = CameraModel::spherical(2048, 1024);
  NoiseSpec noise;
  noise.pixel_sigma = 0.5;
  noise.lidar_range_sigma = 0.005;

  SimulationParams sim_params;
  SimulatedDataset sim =
      simulate_dataset(scene, trajectory, extrinsic, cam, noise, 3, sim_params);
  sim.data.lidar_motions = sim.oracle.lidar_motions;
  std::printf("dataset: %zu scans of ~%zu points, %zu motions\n\n",
              sim.data.scans.size(), sim.data.scans.front().size(),
              sim.data.motion_count());

  {
    PointCloud bare = sim.data.scans[0];
    bare.normals.clear();
    PointCloud serial_cloud, parallel_cloud;
    double s = time_ms([&] { serial_cloud = estimate_normals(bare, false); });
    double p = time_ms([&] { parallel_cloud = estimate_normals(bare, true); });
    report("normal estimation", s, p,
           same_vectors(serial_cloud.normals, parallel_cloud.normals));
  }

  {
    IcpParams params;
    params.parallel = false;
    Result<IcpResult> serial_result(Error{ErrorCode::NoOverlap, ""});
    Result<IcpResult> parallel_result(Error{ErrorCode::NoOverlap, ""});
    double s = time_ms([&] {
      serial_result =
          icp_align(sim.data.scans[0], sim.data.scans[1], RigidMotion{}, params);
    });
    params.parallel = true;
    double p = time_ms([&] {
      parallel_result =
          icp_align(sim.data.scans[0], sim.data.scans[1], RigidMotion{}, params);
    });
    bool same = serial_result.ok() && parallel_result.ok() &&
                same_matrix(serial_result.value().motion.matrix(),
                            parallel_result.value().motion.matrix());
    report("icp align", s, p, same);
  }

  {
    RansacParams params;
    params.iterations = 4000;
    params.seed = 99;
    params.parallel = false;
    Result<EssentialFit> serial_fit(Error{ErrorCode::NoConsensus, ""});
    Result<EssentialFit> parallel_fit(Error{ErrorCode::NoConsensus, ""});
    double s = time_ms(
        [&] { serial_fit = ransac_essential(sim.data.matches[0], params); });
    params.parallel = true;
    double p = time_ms(
        [&] { parallel_fit = ransac_essential(sim.data.matches[0], params); });
    bool same =
        serial_fit.ok() && parallel_fit.ok() &&
        (serial_fit.value().essential - parallel_fit.value().essential)
                .cwiseAbs()
                .maxCoeff() == 0.0;
    report("essential ransac", s, p, same);
  }

  {
    Extrinsic guess;
    guess.transform = extrinsic;
    ReestimateResult serial_run, parallel_run;
    double s = time_ms([&] {
      serial_run = reestimate_all_motions(sim.data, guess, nullptr, 5, {}, {},
                                          false);
    });
    double p = time_ms([&] {
      parallel_run = reestimate_all_motions(sim.data, guess, nullptr, 5, {},
                                            {}, true);
    });
    bool same = serial_run.pairs.size() == parallel_run.pairs.size();
    for (std::size_t i = 0; same && i < serial_run.pairs.size(); ++i)
      same = same_matrix(serial_run.pairs[i].camera.to_rigid().matrix(),
                         parallel_run.pairs[i].camera.to_rigid().matrix());
    report("motion re-estimation", s, p, same);
  }

  return 0;
}
