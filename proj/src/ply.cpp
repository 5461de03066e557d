#include "dynsurf/ply.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dynsurf {

namespace {

void append_float(std::string& buf, float v) {
  char bytes[4];
  std::memcpy(bytes, &v, 4);
  buf.append(bytes, 4);
}

int property_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" || type == "float" ||
      type == "float32") {
    return 4;
  }
  if (type == "double" || type == "float64") return 8;
  throw std::runtime_error("unsupported PLY property type: " + type);
}

}  // namespace

void save_surfel_ply(const std::string& path, const SurfelMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write PLY: " + path);
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << map.surfels.size() << "\n";
  for (const char* p : {"x", "y", "z", "nx", "ny", "nz", "radius", "weight", "created", "updated"}) {
    out << "property float " << p << "\n";
  }
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  std::string buf;
  buf.reserve(map.surfels.size() * 43);
  for (const Surfel& s : map.surfels) {
    append_float(buf, s.position.x());
    append_float(buf, s.position.y());
    append_float(buf, s.position.z());
    append_float(buf, s.normal.x());
    append_float(buf, s.normal.y());
    append_float(buf, s.normal.z());
    append_float(buf, s.radius);
    append_float(buf, s.weight);
    append_float(buf, float(s.created_at));
    append_float(buf, float(s.last_updated));
    buf.push_back(char(s.color.r));
    buf.push_back(char(s.color.g));
    buf.push_back(char(s.color.b));
  }
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

void save_point_cloud_ply(const std::string& path, const std::vector<Eigen::Vector3f>& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write PLY: " + path);
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << points.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "end_header\n";
  std::string buf;
  buf.reserve(points.size() * 12);
  for (const auto& p : points) {
    append_float(buf, p.x());
    append_float(buf, p.y());
    append_float(buf, p.z());
  }
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<Eigen::Vector3f> load_ply_points(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open PLY: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
    throw std::runtime_error("not a PLY file: " + path);
  }
  bool binary = false;
  std::size_t vertex_count = 0;
  bool in_vertex = false;
  int stride = 0, off_x = -1, off_y = -1, off_z = -1;
  std::vector<std::pair<int, int>> field_layout;  // (offset, size) per vertex property
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "binary_little_endian") {
        binary = true;
      } else if (fmt != "ascii") {
        throw std::runtime_error("unsupported PLY format in " + path);
      }
    } else if (tok == "element") {
      std::string name;
      std::size_t count;
      ss >> name >> count;
      if (name == "vertex") {
        vertex_count = count;
        in_vertex = true;
      } else {
        if (in_vertex && count > 0 && vertex_count > 0) {
          // additional elements after vertex are ignored (we stop reading)
        }
        in_vertex = false;
      }
    } else if (tok == "property" && in_vertex) {
      std::string type, name;
      ss >> type >> name;
      if (type == "list") throw std::runtime_error("list properties unsupported in " + path);
      const int size = property_size(type);
      if (name == "x") off_x = stride;
      if (name == "y") off_y = stride;
      if (name == "z") off_z = stride;
      if ((name == "x" || name == "y" || name == "z") && type != "float" && type != "float32") {
        throw std::runtime_error("vertex coordinates must be float in " + path);
      }
      field_layout.push_back({stride, size});
      stride += size;
    } else if (tok == "end_header") {
      break;
    }
  }
  if (off_x < 0 || off_y < 0 || off_z < 0) {
    throw std::runtime_error("PLY has no x/y/z vertex properties: " + path);
  }
  std::vector<Eigen::Vector3f> points(vertex_count);
  if (binary) {
    std::vector<char> row(stride);
    for (auto& p : points) {
      in.read(row.data(), stride);
      if (!in) throw std::runtime_error("truncated PLY data: " + path);
      std::memcpy(&p.x(), row.data() + off_x, 4);
      std::memcpy(&p.y(), row.data() + off_y, 4);
      std::memcpy(&p.z(), row.data() + off_z, 4);
    }
  } else {
    // ascii: map byte offsets back to column indices
    int col_x = -1, col_y = -1, col_z = -1;
    for (int c = 0; c < int(field_layout.size()); ++c) {
      if (field_layout[c].first == off_x) col_x = c;
      if (field_layout[c].first == off_y) col_y = c;
      if (field_layout[c].first == off_z) col_z = c;
    }
    for (auto& p : points) {
      if (!std::getline(in, line)) throw std::runtime_error("truncated PLY data: " + path);
      std::istringstream ss(line);
      double v;
      for (int c = 0; c < int(field_layout.size()); ++c) {
        if (!(ss >> v)) throw std::runtime_error("malformed PLY row in " + path);
        if (c == col_x) p.x() = float(v);
        if (c == col_y) p.y() = float(v);
        if (c == col_z) p.z() = float(v);
      }
    }
  }
  return points;
}

}  // namespace dynsurf
