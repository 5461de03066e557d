#include "dynsurf/motion.hpp"

#include <algorithm>
#include <cmath>

namespace dynsurf {

KMeans2Result kmeans2(std::span<const float> values, int max_iters) {
  KMeans2Result out;
  if (values.size() < 2) {
    out.degenerate = true;
    out.labels.assign(values.size(), 0);
    return out;
  }
  float lo = values[0], hi = values[0];
  for (float v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) {
    out.degenerate = true;
    out.static_centroid = out.dynamic_centroid = lo;
    out.labels.assign(values.size(), 0);
    return out;
  }
  double c0 = lo, c1 = hi;
  for (int it = 0; it < max_iters; ++it) {
    const double boundary = 0.5 * (c0 + c1);
    double sum0 = 0, sum1 = 0;
    std::size_t n0 = 0, n1 = 0;
    for (float v : values) {
      if (v < boundary) {
        sum0 += v;
        ++n0;
      } else {
        sum1 += v;
        ++n1;
      }
    }
    const double next0 = n0 ? sum0 / double(n0) : c0;
    const double next1 = n1 ? sum1 / double(n1) : c1;
    const bool stable = std::abs(next0 - c0) < 1e-12 && std::abs(next1 - c1) < 1e-12;
    c0 = next0;
    c1 = next1;
    if (stable) break;
  }
  if (c0 > c1) std::swap(c0, c1);
  out.static_centroid = c0;
  out.dynamic_centroid = c1;
  const double boundary = 0.5 * (c0 + c1);
  out.labels.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out.labels[i] = values[i] >= boundary ? 1 : 0;
  return out;
}

BinaryMotionMask binary_motion_mask(const GrayF& residual_map, const MotionParams& params) {
  BinaryMotionMask out;
  out.bits = Mask(residual_map.width(), residual_map.height(), 0);

  std::vector<float> valid_values;
  valid_values.reserve(residual_map.size());
  for (std::size_t i = 0; i < residual_map.size(); ++i) {
    if (residual_map[i] >= 0.0f) valid_values.push_back(residual_map[i]);
  }
  if (valid_values.size() < 2) return out;

  // Uniform-stride subsample keeps clustering within the per-frame budget.
  std::vector<float> sample;
  const std::size_t stride = std::max<std::size_t>(1, valid_values.size() / params.max_samples);
  for (std::size_t i = 0; i < valid_values.size(); i += stride) sample.push_back(valid_values[i]);

  const KMeans2Result km = kmeans2(sample, params.kmeans_max_iters);
  out.static_centroid = km.static_centroid;
  out.dynamic_centroid = km.dynamic_centroid;
  if (km.degenerate || km.dynamic_centroid < params.min_dynamic_centroid) {
    return out;  // static scene
  }
  out.empty_scene = false;
  const float boundary = float(0.5 * (km.static_centroid + km.dynamic_centroid));
  for (std::size_t i = 0; i < residual_map.size(); ++i) {
    out.bits[i] = residual_map[i] >= boundary ? 1 : 0;
  }
  return out;
}

Mask motion_segments(const BinaryMotionMask& binary, const SegmentsMask& segments,
                     double overlap_threshold) {
  Mask out(segments.width(), segments.height(), 0);
  if (binary.empty_scene) return out;
  const std::vector<int> inter = segment_intersection_counts(segments, binary.bits);
  std::vector<std::uint8_t> dynamic(segments.segment_count + 1, 0);
  for (int s = 1; s <= segments.segment_count; ++s) {
    if (double(inter[s]) / double(segments.areas[s]) >= overlap_threshold) dynamic[s] = 1;
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dynamic[segments.labels[i]];
  return out;
}

}  // namespace dynsurf
