#pragma once

#include <string>

#include "motioncal/result.hpp"

namespace motioncal {

Result<std::string> read_file(const std::string& path);

// Writes to a sibling temp file and renames over the target, so readers
// never observe a half-written file.
Result<bool> atomic_write_file(const std::string& path,
                               const std::string& bytes);

}  // namespace motioncal
