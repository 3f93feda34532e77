#include "motioncal/ply.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <optional>
#include <sstream>
#include <string>

#include "motioncal/file_io.hpp"

namespace motioncal {

namespace {

enum class ScalarType { I8, U8, I16, U16, I32, U32, F32, F64 };

std::optional<ScalarType> scalar_type(const std::string& s) {
  if (s == "char" || s == "int8") return ScalarType::I8;
  if (s == "uchar" || s == "uint8") return ScalarType::U8;
  if (s == "short" || s == "int16") return ScalarType::I16;
  if (s == "ushort" || s == "uint16") return ScalarType::U16;
  if (s == "int" || s == "int32") return ScalarType::I32;
  if (s == "uint" || s == "uint32") return ScalarType::U32;
  if (s == "float" || s == "float32") return ScalarType::F32;
  if (s == "double" || s == "float64") return ScalarType::F64;
  return std::nullopt;
}

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::I8:
    case ScalarType::U8:
      return 1;
    case ScalarType::I16:
    case ScalarType::U16:
      return 2;
    case ScalarType::I32:
    case ScalarType::U32:
    case ScalarType::F32:
      return 4;
    case ScalarType::F64:
      return 8;
  }
  return 0;
}

double decode_scalar(const char* p, ScalarType t) {
  switch (t) {
    case ScalarType::I8: {
      std::int8_t v;
      std::memcpy(&v, p, 1);
      return v;
    }
    case ScalarType::U8: {
      std::uint8_t v;
      std::memcpy(&v, p, 1);
      return v;
    }
    case ScalarType::I16: {
      std::int16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case ScalarType::U16: {
      std::uint16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case ScalarType::I32: {
      std::int32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case ScalarType::U32: {
      std::uint32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case ScalarType::F32: {
      float v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case ScalarType::F64: {
      double v;
      std::memcpy(&v, p, 8);
      return v;
    }
  }
  return 0.0;
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::F64;
  bool is_list = false;
  ScalarType count_type = ScalarType::U8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> props;
};

struct Header {
  bool binary = false;
  std::vector<Element> elements;
  Eigen::Vector3d sensor_origin = Eigen::Vector3d::Zero();
  std::size_t data_offset = 0;  // bytes into the file
  std::size_t data_line = 0;    // 1-based line where data starts
};

Error parse_error_line(std::size_t line, const std::string& what) {
  return Error{ErrorCode::ParseError,
               "line " + std::to_string(line) + ": " + what};
}

Error parse_error_byte(std::size_t byte, const std::string& what) {
  return Error{ErrorCode::ParseError,
               "byte " + std::to_string(byte) + ": " + what};
}

Result<Header> parse_header(const std::string& bytes) {
  Header header;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool saw_magic = false, saw_format = false, done = false;

  while (pos < bytes.size() && !done) {
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string::npos)
      return parse_error_line(line_no + 1, "header truncated");
    std::string line = bytes.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = eol + 1;
    ++line_no;

    if (!saw_magic) {
      if (line != "ply") return parse_error_line(line_no, "missing ply magic");
      saw_magic = true;
      continue;
    }

    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string fmt, version;
      ss >> fmt >> version;
      if (fmt == "ascii")
        header.binary = false;
      else if (fmt == "binary_little_endian")
        header.binary = true;
      else
        return parse_error_line(line_no, "unsupported format '" + fmt + "'");
      saw_format = true;
    } else if (word == "comment") {
      std::string key;
      ss >> key;
      if (key == "sensor_origin") {
        double x, y, z;
        if (ss >> x >> y >> z) header.sensor_origin = {x, y, z};
      }
    } else if (word == "element") {
      Element e;
      if (!(ss >> e.name >> e.count))
        return parse_error_line(line_no, "malformed element declaration");
      header.elements.push_back(std::move(e));
    } else if (word == "property") {
      if (header.elements.empty())
        return parse_error_line(line_no, "property before any element");
      Property p;
      std::string type_word;
      ss >> type_word;
      if (type_word == "list") {
        std::string count_word, item_word;
        if (!(ss >> count_word >> item_word >> p.name))
          return parse_error_line(line_no, "malformed list property");
        auto ct = scalar_type(count_word);
        auto it = scalar_type(item_word);
        if (!ct || !it)
          return parse_error_line(line_no, "unknown list property type");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
      } else {
        auto t = scalar_type(type_word);
        if (!t || !(ss >> p.name))
          return parse_error_line(line_no, "malformed property declaration");
        p.type = *t;
      }
      header.elements.back().props.push_back(std::move(p));
    } else if (word == "end_header") {
      done = true;
    } else if (word == "obj_info") {
      // Ignored metadata.
    } else {
      return parse_error_line(line_no, "unknown header keyword '" + word + "'");
    }
  }
  if (!done) return parse_error_line(line_no + 1, "header truncated");
  if (!saw_format) return parse_error_line(line_no, "missing format line");
  header.data_offset = pos;
  header.data_line = line_no + 1;
  return header;
}

struct VertexLayout {
  int ix = -1, iy = -1, iz = -1;
  int inx = -1, iny = -1, inz = -1;
};

VertexLayout vertex_layout(const Element& e, std::vector<std::string>* warnings) {
  VertexLayout layout;
  for (std::size_t k = 0; k < e.props.size(); ++k) {
    const std::string& n = e.props[k].name;
    int idx = static_cast<int>(k);
    if (n == "x")
      layout.ix = idx;
    else if (n == "y")
      layout.iy = idx;
    else if (n == "z")
      layout.iz = idx;
    else if (n == "nx")
      layout.inx = idx;
    else if (n == "ny")
      layout.iny = idx;
    else if (n == "nz")
      layout.inz = idx;
    else if (warnings)
      warnings->push_back("skipped vertex property '" + n + "'");
  }
  return layout;
}

}  // namespace

Result<PointCloud> read_point_cloud(const std::string& path,
                                    std::vector<std::string>* warnings) {
  auto file = read_file(path);
  if (!file.ok()) return file.error();
  const std::string& bytes = file.value();

  auto parsed = parse_header(bytes);
  if (!parsed.ok()) return parsed.error();
  const Header& header = parsed.value();

  PointCloud cloud;
  cloud.sensor_origin = header.sensor_origin;

  std::size_t pos = header.data_offset;
  std::size_t line_no = header.data_line;

  auto next_line = [&](std::string& out) -> bool {
    if (pos >= bytes.size()) return false;
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string::npos) eol = bytes.size();
    out = bytes.substr(pos, eol - pos);
    if (!out.empty() && out.back() == '\r') out.pop_back();
    pos = eol < bytes.size() ? eol + 1 : bytes.size();
    ++line_no;
    return true;
  };

  for (const Element& element : header.elements) {
    bool is_vertex = element.name == "vertex";
    bool is_face = element.name == "face";
    VertexLayout layout;
    if (is_vertex) {
      layout = vertex_layout(element, warnings);
      if (layout.ix < 0 || layout.iy < 0 || layout.iz < 0)
        return Error{ErrorCode::ParseError,
                     "vertex element lacks x/y/z properties"};
      bool any_n = layout.inx >= 0 || layout.iny >= 0 || layout.inz >= 0;
      bool all_n = layout.inx >= 0 && layout.iny >= 0 && layout.inz >= 0;
      if (any_n && !all_n) {
        if (warnings) warnings->push_back("incomplete normals ignored");
        layout.inx = layout.iny = layout.inz = -1;
      }
      cloud.points.reserve(element.count);
      if (layout.inx >= 0) cloud.normals.reserve(element.count);
    }

    for (std::size_t row = 0; row < element.count; ++row) {
      std::vector<double> scalars(element.props.size(), 0.0);
      std::vector<double> list_values;

      if (!header.binary) {
        std::string line;
        do {
          if (!next_line(line))
            return parse_error_line(line_no + 1, "unexpected end of file in " +
                                                     element.name + " data");
        } while (line.empty());
        std::istringstream ss(line);
        for (std::size_t k = 0; k < element.props.size(); ++k) {
          const Property& p = element.props[k];
          if (p.is_list) {
            long count;
            if (!(ss >> count) || count < 0)
              return parse_error_line(line_no, "malformed list count");
            list_values.resize(static_cast<std::size_t>(count));
            for (long j = 0; j < count; ++j)
              if (!(ss >> list_values[static_cast<std::size_t>(j)]))
                return parse_error_line(line_no, "truncated list values");
          } else {
            if (!(ss >> scalars[k]))
              return parse_error_line(
                  line_no, "expected " + std::to_string(element.props.size()) +
                               " values");
          }
        }
        std::string extra;
        if (ss >> extra)
          return parse_error_line(line_no, "trailing tokens '" + extra + "'");
      } else {
        for (std::size_t k = 0; k < element.props.size(); ++k) {
          const Property& p = element.props[k];
          if (p.is_list) {
            std::size_t csize = scalar_size(p.count_type);
            if (pos + csize > bytes.size())
              return parse_error_byte(pos, "unexpected end of file");
            auto count = static_cast<long>(
                decode_scalar(bytes.data() + pos, p.count_type));
            pos += csize;
            if (count < 0)
              return parse_error_byte(pos, "negative list count");
            std::size_t isize = scalar_size(p.type);
            list_values.resize(static_cast<std::size_t>(count));
            for (long j = 0; j < count; ++j) {
              if (pos + isize > bytes.size())
                return parse_error_byte(pos, "unexpected end of file");
              list_values[static_cast<std::size_t>(j)] =
                  decode_scalar(bytes.data() + pos, p.type);
              pos += isize;
            }
          } else {
            std::size_t size = scalar_size(p.type);
            if (pos + size > bytes.size())
              return parse_error_byte(pos, "unexpected end of file");
            scalars[k] = decode_scalar(bytes.data() + pos, p.type);
            pos += size;
          }
        }
      }

      if (is_vertex) {
        cloud.points.emplace_back(scalars[static_cast<std::size_t>(layout.ix)],
                                  scalars[static_cast<std::size_t>(layout.iy)],
                                  scalars[static_cast<std::size_t>(layout.iz)]);
        if (layout.inx >= 0)
          cloud.normals.emplace_back(
              scalars[static_cast<std::size_t>(layout.inx)],
              scalars[static_cast<std::size_t>(layout.iny)],
              scalars[static_cast<std::size_t>(layout.inz)]);
      } else if (is_face && list_values.size() == 3) {
        cloud.triangles.push_back({static_cast<int>(list_values[0]),
                                   static_cast<int>(list_values[1]),
                                   static_cast<int>(list_values[2])});
      }
    }
  }
  return cloud;
}

Result<bool> write_point_cloud(const std::string& path,
                               const PointCloud& cloud, bool binary) {
  std::string out;
  out.reserve(cloud.size() * (binary ? 48 : 80) + 512);
  char buf[256];

  out += "ply\n";
  out += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
  std::snprintf(buf, sizeof(buf), "comment sensor_origin %.17g %.17g %.17g\n",
                cloud.sensor_origin.x(), cloud.sensor_origin.y(),
                cloud.sensor_origin.z());
  out += buf;
  std::snprintf(buf, sizeof(buf), "element vertex %zu\n", cloud.size());
  out += buf;
  out += "property double x\nproperty double y\nproperty double z\n";
  bool with_normals = cloud.has_normals();
  if (with_normals)
    out += "property double nx\nproperty double ny\nproperty double nz\n";
  if (!cloud.triangles.empty()) {
    std::snprintf(buf, sizeof(buf), "element face %zu\n",
                  cloud.triangles.size());
    out += buf;
    out += "property list uchar int vertex_indices\n";
  }
  out += "end_header\n";

  auto append_binary = [&out](const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
  };

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d& p = cloud.points[i];
    if (binary) {
      double row[6] = {p.x(), p.y(), p.z(), 0, 0, 0};
      std::size_t n = 3;
      if (with_normals) {
        row[3] = cloud.normals[i].x();
        row[4] = cloud.normals[i].y();
        row[5] = cloud.normals[i].z();
        n = 6;
      }
      append_binary(row, n * sizeof(double));
    } else {
      if (with_normals) {
        const Eigen::Vector3d& nm = cloud.normals[i];
        std::snprintf(buf, sizeof(buf),
                      "%.17g %.17g %.17g %.17g %.17g %.17g\n", p.x(), p.y(),
                      p.z(), nm.x(), nm.y(), nm.z());
      } else {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x(), p.y(),
                      p.z());
      }
      out += buf;
    }
  }

  for (const auto& tri : cloud.triangles) {
    if (binary) {
      std::uint8_t count = 3;
      append_binary(&count, 1);
      std::int32_t idx[3] = {tri[0], tri[1], tri[2]};
      append_binary(idx, sizeof(idx));
    } else {
      std::snprintf(buf, sizeof(buf), "3 %d %d %d\n", tri[0], tri[1], tri[2]);
      out += buf;
    }
  }

  return atomic_write_file(path, out);
}

}  // namespace motioncal
