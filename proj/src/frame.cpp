#include "dynsurf/frame.hpp"

#include <cmath>

namespace dynsurf {

GrayF compute_intensity(const ColorImage& rgb) {
  GrayF out(rgb.width(), rgb.height());
#pragma omp parallel for schedule(static)
  for (int y = 0; y < rgb.height(); ++y) {
    const Rgb8* src = rgb.row(y);
    float* dst = out.row(y);
    for (int x = 0; x < rgb.width(); ++x) dst[x] = intensity_of(src[x]);
  }
  return out;
}

void sanitize_depth(GrayF& depth, const DepthRange& range) {
  const float lo = float(range.min_m);
  const float hi = float(range.max_m);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < depth.height(); ++y) {
    float* row = depth.row(y);
    for (int x = 0; x < depth.width(); ++x) {
      const float d = row[x];
      if (!(d >= lo && d <= hi) || !std::isfinite(d)) row[x] = 0.0f;
    }
  }
}

namespace {

inline void vertex_row(const GrayF& depth, const Intrinsics& K, int y,
                       Image<Eigen::Vector3f>& vertex) {
  const float* d = depth.row(y);
  Eigen::Vector3f* v = vertex.row(y);
  for (int x = 0; x < depth.width(); ++x) {
    if (d[x] > 0.0f) {
      v[x] = Eigen::Vector3f(float((x - K.cx) * d[x] / K.fx), float((y - K.cy) * d[x] / K.fy), d[x]);
    } else {
      v[x].setZero();
    }
  }
}

inline void normal_row(const GrayF& depth, int y, const Image<Eigen::Vector3f>& vertex,
                       Image<Eigen::Vector3f>& normal, Mask& valid) {
  const int w = depth.width();
  const int h = depth.height();
  Eigen::Vector3f* n = normal.row(y);
  std::uint8_t* ok = valid.row(y);
  for (int x = 0; x < w; ++x) {
    n[x].setZero();
    ok[x] = 0;
    if (x <= 0 || y <= 0 || x >= w - 1 || y >= h - 1) continue;
    if (depth(x, y) <= 0 || depth(x - 1, y) <= 0 || depth(x + 1, y) <= 0 || depth(x, y - 1) <= 0 ||
        depth(x, y + 1) <= 0) {
      continue;
    }
    const Eigen::Vector3f du = vertex(x + 1, y) - vertex(x - 1, y);
    const Eigen::Vector3f dv = vertex(x, y + 1) - vertex(x, y - 1);
    Eigen::Vector3f c = du.cross(dv);
    const float len = c.norm();
    if (len < 1e-12f) continue;
    c /= len;
    if (c.dot(vertex(x, y)) > 0) c = -c;  // camera-facing: n.v < 0
    n[x] = c;
    ok[x] = 1;
  }
}

}  // namespace

void compute_vertex_normal_maps(const GrayF& depth, const Intrinsics& K,
                                Image<Eigen::Vector3f>& vertex, Image<Eigen::Vector3f>& normal,
                                Mask& valid) {
  const int w = depth.width(), h = depth.height();
  vertex = Image<Eigen::Vector3f>(w, h);
  normal = Image<Eigen::Vector3f>(w, h);
  valid = Mask(w, h);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) vertex_row(depth, K, y, vertex);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) normal_row(depth, y, vertex, normal, valid);
}

Frame build_frame(double timestamp, ColorImage rgb, GrayF depth, const Intrinsics& K,
                  const DepthRange& range) {
  Frame f;
  f.timestamp = timestamp;
  f.K = K;
  sanitize_depth(depth, range);
  f.intensity = compute_intensity(rgb);
  f.rgb = std::move(rgb);
  compute_vertex_normal_maps(depth, K, f.vertex, f.normal, f.valid);
  f.depth = std::move(depth);
  return f;
}

namespace serial {

void compute_vertex_normal_maps(const GrayF& depth, const Intrinsics& K,
                                Image<Eigen::Vector3f>& vertex, Image<Eigen::Vector3f>& normal,
                                Mask& valid) {
  const int w = depth.width(), h = depth.height();
  vertex = Image<Eigen::Vector3f>(w, h);
  normal = Image<Eigen::Vector3f>(w, h);
  valid = Mask(w, h);
  for (int y = 0; y < h; ++y) vertex_row(depth, K, y, vertex);
  for (int y = 0; y < h; ++y) normal_row(depth, y, vertex, normal, valid);
}

}  // namespace serial

}  // namespace dynsurf
