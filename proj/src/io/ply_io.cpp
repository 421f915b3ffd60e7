#include "mf/io/ply_io.h"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "mf/error.h"

namespace mf {

namespace {

void append_f32(std::string& buf, float v) {
  char raw[4];
  std::memcpy(raw, &v, 4);
  buf.append(raw, 4);
}

struct Property {
  std::string name;
  std::string type;
};

size_t type_size(const std::string& t) {
  if (t == "float" || t == "float32" || t == "int" || t == "int32" || t == "uint" ||
      t == "uint32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  if (t == "uchar" || t == "uint8" || t == "char" || t == "int8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  throw Error("ply: unsupported property type " + t);
}

double read_scalar(const char* p, const std::string& t) {
  if (t == "float" || t == "float32") {
    float v;
    std::memcpy(&v, p, 4);
    return v;
  }
  if (t == "double" || t == "float64") {
    double v;
    std::memcpy(&v, p, 8);
    return v;
  }
  if (t == "uchar" || t == "uint8") return *reinterpret_cast<const uint8_t*>(p);
  if (t == "char" || t == "int8") return *reinterpret_cast<const int8_t*>(p);
  if (t == "int" || t == "int32") {
    int32_t v;
    std::memcpy(&v, p, 4);
    return v;
  }
  if (t == "uint" || t == "uint32") {
    uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
  }
  if (t == "short" || t == "int16") {
    int16_t v;
    std::memcpy(&v, p, 2);
    return v;
  }
  if (t == "ushort" || t == "uint16") {
    uint16_t v;
    std::memcpy(&v, p, 2);
    return v;
  }
  throw Error("ply: unsupported property type " + t);
}

}  // namespace

void write_surfel_ply(const std::filesystem::path& path, const std::vector<Surfel>& surfels,
                      const Se3Pose* transform) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string());

  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << surfels.size() << "\n";
  for (const char* n : {"x", "y", "z", "nx", "ny", "nz"})
    out << "property float " << n << "\n";
  for (const char* n : {"red", "green", "blue"}) out << "property uchar " << n << "\n";
  out << "property float radius\nproperty float confidence\nend_header\n";

  std::string buf;
  buf.reserve(surfels.size() * 35);
  for (const Surfel& s : surfels) {
    Eigen::Vector3d p = s.position;
    Eigen::Vector3d n = s.normal;
    if (transform) {
      p = (*transform) * p;
      n = transform->rotation() * n;
    }
    for (int i = 0; i < 3; ++i) append_f32(buf, static_cast<float>(p[i]));
    for (int i = 0; i < 3; ++i) append_f32(buf, static_cast<float>(n[i]));
    for (int i = 0; i < 3; ++i)
      buf.push_back(static_cast<char>(std::clamp(std::lround(s.color[i]), 0L, 255L)));
    append_f32(buf, static_cast<float>(s.radius));
    append_f32(buf, static_cast<float>(s.weight));
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("write failed: " + path.string());
}

void write_point_ply(const std::filesystem::path& path,
                     const std::vector<Eigen::Vector3d>& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string());
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << points.size() << "\n";
  for (const char* n : {"x", "y", "z"}) out << "property float " << n << "\n";
  out << "end_header\n";
  std::string buf;
  buf.reserve(points.size() * 12);
  for (const Eigen::Vector3d& p : points)
    for (int i = 0; i < 3; ++i) append_f32(buf, static_cast<float>(p[i]));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<Surfel> read_surfel_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());

  std::string line;
  std::getline(in, line);
  if (line != "ply") throw Error("not a ply file: " + path.string());

  bool binary = false;
  size_t count = 0;
  std::vector<Property> props;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "binary_little_endian")
        binary = true;
      else if (fmt != "ascii")
        throw Error("ply: unsupported format " + fmt);
    } else if (word == "element") {
      std::string name;
      ss >> name >> count;
      if (name != "vertex") throw Error("ply: expected vertex element");
    } else if (word == "property") {
      Property p;
      ss >> p.type >> p.name;
      if (p.type == "list") throw Error("ply: list properties unsupported");
      props.push_back(p);
    } else if (word == "end_header") {
      break;
    }
  }

  size_t stride = 0;
  for (const Property& p : props) stride += type_size(p.type);

  std::vector<Surfel> out(count);
  std::vector<char> row(stride);
  for (size_t i = 0; i < count; ++i) {
    std::vector<double> vals(props.size());
    if (binary) {
      in.read(row.data(), static_cast<std::streamsize>(stride));
      if (!in) throw Error("ply: truncated data in " + path.string());
      size_t off = 0;
      for (size_t k = 0; k < props.size(); ++k) {
        vals[k] = read_scalar(row.data() + off, props[k].type);
        off += type_size(props[k].type);
      }
    } else {
      for (size_t k = 0; k < props.size(); ++k)
        if (!(in >> vals[k])) throw Error("ply: truncated data in " + path.string());
    }
    Surfel& s = out[i];
    for (size_t k = 0; k < props.size(); ++k) {
      const std::string& n = props[k].name;
      const double v = vals[k];
      if (n == "x") s.position.x() = v;
      else if (n == "y") s.position.y() = v;
      else if (n == "z") s.position.z() = v;
      else if (n == "nx") s.normal.x() = v;
      else if (n == "ny") s.normal.y() = v;
      else if (n == "nz") s.normal.z() = v;
      else if (n == "red") s.color.x() = v;
      else if (n == "green") s.color.y() = v;
      else if (n == "blue") s.color.z() = v;
      else if (n == "radius") s.radius = v;
      else if (n == "confidence") s.weight = v;
    }
  }
  return out;
}

std::vector<Eigen::Vector3d> read_point_ply(const std::filesystem::path& path) {
  std::vector<Surfel> s = read_surfel_ply(path);
  std::vector<Eigen::Vector3d> out(s.size());
  for (size_t i = 0; i < s.size(); ++i) out[i] = s[i].position;
  return out;
}

}  // namespace mf
