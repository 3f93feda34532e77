#include "motioncal/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "json.hpp"
#include "motioncal/file_io.hpp"
#include "motioncal/synthetic.hpp"

namespace motioncal {

namespace {

using Json = nlohmann::ordered_json;

const char* status_name(PipelineStatus s) {
  switch (s) {
    case PipelineStatus::Converged:
      return "converged";
    case PipelineStatus::MaxIterations:
      return "max_iterations";
    case PipelineStatus::Failed:
      return "failed";
  }
  return "failed";
}

Result<PipelineStatus> status_from(const std::string& s) {
  if (s == "converged") return PipelineStatus::Converged;
  if (s == "max_iterations") return PipelineStatus::MaxIterations;
  if (s == "failed") return PipelineStatus::Failed;
  return Error{ErrorCode::ParseError, "unknown status '" + s + "'"};
}

Json extrinsic_to_json(const Extrinsic& x) {
  Json j;
  Eigen::Matrix4d mat = x.transform.matrix();
  Json cells = Json::array();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) cells.push_back(mat(r, c));
  j["matrix"] = std::move(cells);
  Eigen::Quaterniond q = x.transform.rotation.quaternion();
  j["quaternion"] = Json::array({q.w(), q.x(), q.y(), q.z()});
  j["translation"] = Json::array({x.transform.translation.x(),
                                  x.transform.translation.y(),
                                  x.transform.translation.z()});
  j["rotation_residual"] = x.rotation_residual;
  j["translation_residual"] = x.translation_residual;
  j["condition"] = x.condition;
  j["scales"] = x.scales;
  Json reliable = Json::array();
  for (bool b : x.scale_reliable) reliable.push_back(b);
  j["scale_reliable"] = std::move(reliable);
  return j;
}

Result<Extrinsic> extrinsic_from_json(const Json& j) {
  const Json& arr = j.at("matrix");
  if (!arr.is_array() || arr.size() != 16)
    return Error{ErrorCode::ParseError, "extrinsic needs 16 matrix values"};
  Eigen::Matrix4d mat;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) mat(r, c) = arr[4 * r + c].get<double>();
  Extrinsic x;
  x.transform.rotation = Rotation::from_matrix(mat.topLeftCorner<3, 3>());
  x.transform.translation = mat.topRightCorner<3, 1>();
  x.rotation_residual = j.value("rotation_residual", 0.0);
  x.translation_residual = j.value("translation_residual", 0.0);
  x.condition = j.value("condition", 0.0);
  if (j.contains("scales")) x.scales = j["scales"].get<std::vector<double>>();
  if (j.contains("scale_reliable"))
    for (const Json& b : j["scale_reliable"])
      x.scale_reliable.push_back(b.get<bool>());
  return x;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Result<bool> write_report(const std::string& path,
                          const CalibrationReport& report,
                          const std::string& dataset_id) {
  Json j;
  j["schema_version"] = 1;
  j["dataset_id"] = dataset_id;
  j["status"] = status_name(report.status);
  j["failure_reason"] = report.failure_reason;
  j["extrinsic"] = extrinsic_to_json(report.extrinsic);

  Json iterations = Json::array();
  for (const IterationRecord& rec : report.per_iteration) {
    Json it;
    it["iteration"] = rec.iteration;
    if (std::isfinite(rec.mean_angular_residual))
      it["mean_angular_residual"] = rec.mean_angular_residual;
    else
      it["mean_angular_residual"] = nullptr;
    it["pair_count"] = rec.pair_count;
    it["extrinsic"] = extrinsic_to_json(rec.extrinsic);
    iterations.push_back(std::move(it));
  }
  j["per_iteration"] = std::move(iterations);

  Json diags = Json::array();
  for (const MotionDiagnostic& d : report.motion_diagnostics) {
    Json dj;
    dj["id"] = d.id;
    dj["rotation_angle"] = d.rotation_angle;
    dj["propagation_gain"] = d.propagation_gain;
    dj["translation_magnitude"] = d.translation_magnitude;
    Json flags = Json::array();
    if (d.weak_rotation) flags.push_back("WEAK_ROTATION");
    if (d.large_baseline) flags.push_back("LARGE_BASELINE");
    dj["flags"] = std::move(flags);
    diags.push_back(std::move(dj));
  }
  j["motion_diagnostics"] = std::move(diags);
  j["warnings"] = report.warnings;

  return atomic_write_file(path, j.dump(2) + "\n");
}

Result<LoadedReport> read_report(const std::string& path) {
  auto file = read_file(path);
  if (!file.ok()) return file.error();
  try {
    Json j = Json::parse(file.value());
    LoadedReport loaded;
    loaded.dataset_id = j.value("dataset_id", std::string());
    auto status = status_from(j.at("status").get<std::string>());
    if (!status.ok()) return status.error();
    loaded.report.status = status.value();
    loaded.report.failure_reason = j.value("failure_reason", std::string());
    auto x = extrinsic_from_json(j.at("extrinsic"));
    if (!x.ok()) return x.error();
    loaded.report.extrinsic = x.value();

    for (const Json& it : j.at("per_iteration")) {
      IterationRecord rec;
      rec.iteration = it.at("iteration").get<int>();
      const Json& res = it.at("mean_angular_residual");
      rec.mean_angular_residual =
          res.is_null() ? std::numeric_limits<double>::quiet_NaN()
                        : res.get<double>();
      rec.pair_count = it.at("pair_count").get<std::size_t>();
      auto snap = extrinsic_from_json(it.at("extrinsic"));
      if (!snap.ok()) return snap.error();
      rec.extrinsic = snap.value();
      loaded.report.per_iteration.push_back(std::move(rec));
    }

    if (j.contains("motion_diagnostics")) {
      for (const Json& dj : j["motion_diagnostics"]) {
        MotionDiagnostic d;
        d.id = dj.value("id", std::string());
        d.rotation_angle = dj.value("rotation_angle", 0.0);
        d.propagation_gain = dj.value("propagation_gain", 0.0);
        d.translation_magnitude = dj.value("translation_magnitude", 0.0);
        for (const Json& f : dj.value("flags", Json::array())) {
          if (f == "WEAK_ROTATION") d.weak_rotation = true;
          if (f == "LARGE_BASELINE") d.large_baseline = true;
        }
        loaded.report.motion_diagnostics.push_back(std::move(d));
      }
    }
    if (j.contains("warnings"))
      loaded.report.warnings = j["warnings"].get<std::vector<std::string>>();
    return loaded;
  } catch (const Json::exception& e) {
    return Error{ErrorCode::ParseError, std::string(e.what())};
  }
}

Result<bool> write_eval_csv(const std::string& path,
                            const std::vector<LoadedReport>& reports,
                            const std::vector<OracleFile>& oracles) {
  std::map<std::string, const OracleFile*> by_id;
  for (const OracleFile& oracle : oracles) by_id.emplace(oracle.dataset_id, &oracle);

  std::vector<const OracleFile*> matched(reports.size(), nullptr);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    auto it = by_id.find(reports[i].dataset_id);
    if (it == by_id.end())
      return Error{ErrorCode::InvalidArgument,
                   "dataset id mismatch: report " + std::to_string(i) +
                       " has '" + reports[i].dataset_id +
                       "', no oracle carries it"};
    matched[i] = it->second;
  }

  std::string out;
  char buf[512];
  out +=
      "# final: report,dataset_id,status,iterations,pair_count,"
      "rotation_error_deg,translation_error_m\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const CalibrationReport& r = reports[i].report;
    auto [rot, trans] = evaluate_extrinsic(r.extrinsic.transform,
                                           matched[i]->true_extrinsic);
    int iters =
        r.per_iteration.empty() ? 0 : r.per_iteration.back().iteration;
    std::size_t pairs =
        r.per_iteration.empty() ? 0 : r.per_iteration.back().pair_count;
    std::snprintf(buf, sizeof(buf), "final,%zu,%s,%s,%d,%zu,%.12g,%.12g\n", i,
                  reports[i].dataset_id.c_str(), status_name(r.status), iters,
                  pairs, rot, trans);
    out += buf;
  }

  out +=
      "# curve: report,iteration,rotation_error_deg,translation_error_m,"
      "mean_angular_residual,rotation_residual,translation_residual,"
      "pair_count\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (const IterationRecord& rec : reports[i].report.per_iteration) {
      auto [rot, trans] = evaluate_extrinsic(rec.extrinsic.transform,
                                             matched[i]->true_extrinsic);
      std::string residual;
      if (std::isfinite(rec.mean_angular_residual)) {
        std::snprintf(buf, sizeof(buf), "%.12g", rec.mean_angular_residual);
        residual = buf;
      }
      std::snprintf(buf, sizeof(buf),
                    "curve,%zu,%d,%.12g,%.12g,%s,%.12g,%.12g,%zu\n", i,
                    rec.iteration, rot, trans, residual.c_str(),
                    rec.extrinsic.rotation_residual,
                    rec.extrinsic.translation_residual, rec.pair_count);
      out += buf;
    }
  }

  std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>>
      sweep;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const CalibrationReport& r = reports[i].report;
    if (r.per_iteration.empty()) continue;
    auto [rot, trans] = evaluate_extrinsic(r.extrinsic.transform,
                                           matched[i]->true_extrinsic);
    std::size_t pairs = r.per_iteration.back().pair_count;
    sweep[pairs].first.push_back(rot);
    sweep[pairs].second.push_back(trans);
  }
  out +=
      "# sweep: pair_count,n_reports,median_rotation_error_deg,"
      "median_translation_error_m\n";
  for (const auto& [pairs, errors] : sweep) {
    std::snprintf(buf, sizeof(buf), "sweep,%zu,%zu,%.12g,%.12g\n", pairs,
                  errors.first.size(), median_of(errors.first),
                  median_of(errors.second));
    out += buf;
  }

  return atomic_write_file(path, out);
}

Result<bool> write_eval_csv(const std::string& path,
                            const std::vector<LoadedReport>& reports,
                            const OracleFile& oracle) {
  return write_eval_csv(path, reports, std::vector<OracleFile>{oracle});
}

}  // namespace motioncal
