#pragma once

#include <Eigen/Core>

#include "dynsurf/geometry.hpp"
#include "dynsurf/image.hpp"

namespace dynsurf {

struct DepthRange {
  double min_m = 0.1;
  double max_m = 6.0;
};

/// One RGB-D observation with its derived geometry. valid marks pixels that
/// carry both a vertex (depth inside the accepted range) and a well-defined
/// camera-facing normal.
struct Frame {
  double timestamp = 0.0;
  ColorImage rgb;
  GrayF depth;       // meters, 0 = hole
  GrayF intensity;   // luma in [0,1]
  Image<Eigen::Vector3f> vertex;
  Image<Eigen::Vector3f> normal;
  Mask valid;
  Intrinsics K;

  int width() const { return depth.width(); }
  int height() const { return depth.height(); }
};

/// Luma conversion used everywhere a grayscale value is needed:
/// (0.299 R + 0.587 G + 0.114 B) / 255.
inline float intensity_of(const Rgb8& c) {
  return (0.299f * c.r + 0.587f * c.g + 0.114f * c.b) / 255.0f;
}

GrayF compute_intensity(const ColorImage& rgb);

/// Back-projects the depth image and derives normals from central
/// differences of the vertex map, oriented toward the camera. A pixel is
/// valid only if its depth and the depth of all four direct neighbors are
/// valid and the cross product is non-degenerate. OpenMP-parallel.
void compute_vertex_normal_maps(const GrayF& depth, const Intrinsics& K,
                                Image<Eigen::Vector3f>& vertex,
                                Image<Eigen::Vector3f>& normal, Mask& valid);

/// Replaces depth readings outside [range.min_m, range.max_m] with 0.
void sanitize_depth(GrayF& depth, const DepthRange& range);

Frame build_frame(double timestamp, ColorImage rgb, GrayF depth, const Intrinsics& K,
                  const DepthRange& range = {});

namespace serial {
/// Single-threaded reference of the vertex/normal kernel; kept for tests and
/// the kernel benchmark.
void compute_vertex_normal_maps(const GrayF& depth, const Intrinsics& K,
                                Image<Eigen::Vector3f>& vertex,
                                Image<Eigen::Vector3f>& normal, Mask& valid);
}  // namespace serial

}  // namespace dynsurf
