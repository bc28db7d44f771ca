#include "eyoc/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace eyoc {

PointCloud read_cloud_bin(const std::string& path, int stride) {
  if (stride < 3) throw ConfigError("read_cloud_bin: stride must be >= 3");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  in.seekg(0, std::ios::end);
  const std::streamoff bytes = in.tellg();
  in.seekg(0, std::ios::beg);
  const std::streamoff point_bytes = static_cast<std::streamoff>(stride) * 4;
  if (bytes % point_bytes != 0)
    throw MalformedFile(path + ": trailing partial record at byte offset " +
                        std::to_string(bytes - bytes % point_bytes));
  PointCloud cloud;
  const std::size_t n = static_cast<std::size_t>(bytes / point_bytes);
  cloud.points.reserve(n);
  std::vector<float> buf(static_cast<std::size_t>(stride));
  for (std::size_t i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()), point_bytes);
    if (!in) throw MalformedFile(path + ": short read at record " + std::to_string(i));
    cloud.points.emplace_back(buf[0], buf[1], buf[2]);
  }
  return cloud;
}

void write_cloud_bin(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& p : cloud.points) {
    const float xyz[3] = {static_cast<float>(p.x()), static_cast<float>(p.y()),
                          static_cast<float>(p.z())};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
  }
  if (!out) throw IoError("write failed: " + path);
}

std::string format_pose_line(const Pose& pose) {
  char buf[512];
  const auto& r = pose.rotation;
  const auto& t = pose.translation;
  std::snprintf(buf, sizeof(buf),
                "%.12e %.12e %.12e %.12e %.12e %.12e %.12e %.12e %.12e %.12e %.12e %.12e",
                r(0, 0), r(0, 1), r(0, 2), t(0), r(1, 0), r(1, 1), r(1, 2), t(1), r(2, 0),
                r(2, 1), r(2, 2), t(2));
  return buf;
}

std::vector<Pose> read_pose_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<Pose> poses;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    double v[12];
    for (int i = 0; i < 12; ++i) {
      if (!(ss >> v[i]))
        throw MalformedFile(path + ": line " + std::to_string(lineno) +
                            " has fewer than 12 values");
    }
    Pose p;
    p.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    p.translation << v[3], v[7], v[11];
    poses.push_back(p);
  }
  return poses;
}

void write_pose_file(const std::vector<Pose>& poses, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& p : poses) out << format_pose_line(p) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace eyoc
