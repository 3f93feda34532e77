#include "motioncal/file_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <system_error>

namespace motioncal {

Result<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    return Error{ErrorCode::IoError, "cannot open " + path};
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad())
    return Error{ErrorCode::IoError, "read failed on " + path};
  return bytes;
}

Result<bool> atomic_write_file(const std::string& path,
                               const std::string& bytes) {
  std::filesystem::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) {
    std::filesystem::create_directories(target.parent_path(), ec);
    ec.clear();
  }
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      return Error{ErrorCode::IoError, "cannot open " + tmp.string()};
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out)
      return Error{ErrorCode::IoError, "write failed on " + tmp.string()};
  }
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    return Error{ErrorCode::IoError, "rename failed for " + path};
  }
  return true;
}

}  // namespace motioncal
