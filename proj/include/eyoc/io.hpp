#pragma once

#include <string>
#include <vector>

#include "eyoc/geom.hpp"

namespace eyoc {

/// KITTI-style .bin: consecutive little-endian float32 triplets, no header.
/// stride = floats per point; floats beyond the first three are skipped.
PointCloud read_cloud_bin(const std::string& path, int stride = 3);
void write_cloud_bin(const PointCloud& cloud, const std::string& path);

/// KITTI odometry pose file: 12 whitespace-separated decimals per line,
/// row-major 3x4 [R|t].
std::vector<Pose> read_pose_file(const std::string& path);
void write_pose_file(const std::vector<Pose>& poses, const std::string& path);

std::string format_pose_line(const Pose& pose);

}  // namespace eyoc
