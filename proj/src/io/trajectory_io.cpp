#include "mf/io/trajectory_io.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mf/error.h"

namespace mf {

void write_trajectory_file(const std::filesystem::path& path, const std::vector<PoseRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string());
  char buf[256];
  for (const PoseRow& row : rows) {
    const Eigen::Vector3d& t = row.second.translation();
    Eigen::Quaterniond q = row.second.quaternion();
    if (q.w() < 0) q.coeffs() = -q.coeffs();  // canonical sign for reproducible files
    std::snprintf(buf, sizeof(buf), "%d %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", row.first, t.x(),
                  t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    out << buf;
  }
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<PoseRow> read_trajectory_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trajectory " + path.string());
  std::vector<PoseRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int t;
    double tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
      throw Error("bad trajectory row in " + path.string() + ": " + line);
    if (!rows.empty() && t <= rows.back().first)
      throw Error("non-increasing timestamps in " + path.string());
    const Eigen::Quaterniond q(qw, qx, qy, qz);
    rows.emplace_back(t, Se3Pose(q.normalized().toRotationMatrix(), {tx, ty, tz}));
  }
  return rows;
}

}  // namespace mf
