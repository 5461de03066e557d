#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "dynsurf/surfel_map.hpp"

namespace dynsurf {

/// Binary little-endian PLY with one vertex element carrying ten float
/// properties (x y z nx ny nz radius weight created updated) and three color
/// bytes (red green blue).
void save_surfel_ply(const std::string& path, const SurfelMap& map);

/// Plain point cloud export (x y z floats, binary little-endian).
void save_point_cloud_ply(const std::string& path, const std::vector<Eigen::Vector3f>& points);

/// Reads vertex positions from an ascii or binary little-endian PLY; all
/// other properties are skipped.
std::vector<Eigen::Vector3f> load_ply_points(const std::string& path);

}  // namespace dynsurf
