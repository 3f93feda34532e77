#pragma once

#include <string>
#include <vector>

#include "motioncal/manifest.hpp"
#include "motioncal/pipeline.hpp"
#include "motioncal/result.hpp"

namespace motioncal {

// Versioned JSON snapshot of a calibration run. Content is a pure function
// of the inputs (no timestamps, no environment), so reruns with the same
// seed produce byte-identical files. The extrinsic appears both as a 4x4
// row-major matrix and as quaternion + translation.
Result<bool> write_report(const std::string& path,
                          const CalibrationReport& report,
                          const std::string& dataset_id);

struct LoadedReport {
  CalibrationReport report;
  std::string dataset_id;
};

Result<LoadedReport> read_report(const std::string& path);

// Error curves against the oracles, one CSV with tagged row groups:
// `final` rows per report, `curve` rows per iteration, and a `sweep`
// summary grouping reports by pair count (the cross-dataset motion-count
// comparison). Every report must match some oracle by dataset id.
Result<bool> write_eval_csv(const std::string& path,
                            const std::vector<LoadedReport>& reports,
                            const std::vector<OracleFile>& oracles);
Result<bool> write_eval_csv(const std::string& path,
                            const std::vector<LoadedReport>& reports,
                            const OracleFile& oracle);

}  // namespace motioncal
