#pragma once

#include <vector>

#include "dynsurf/frame.hpp"
#include "dynsurf/image.hpp"

namespace dynsurf {

struct SegmentationParams {
  double theta_dist = 0.01;       // meters, point-to-plane distance discontinuity
  double theta_angle_deg = 20.0;  // normal discontinuity
  int min_segment_area = 300;     // pixels
};

/// Per-pixel segment labels. Label 0 marks edge/invalid/too-small pixels;
/// labels 1..segment_count are assigned in decreasing area order.
/// areas[l] is the pixel count of label l; areas[0] counts unlabeled pixels.
struct SegmentsMask {
  LabelImage labels;
  int segment_count = 0;
  std::vector<int> areas;

  int width() const { return labels.width(); }
  int height() const { return labels.height(); }
};

/// Marks geometric discontinuities: pixel p is an edge if any valid
/// 8-neighbor q has |(v_q - v_p) . n_p| > theta_dist or
/// n_p . n_q < cos(theta_angle). Invalid pixels are edges. OpenMP-parallel.
Mask compute_edge_mask(const Frame& frame, const SegmentationParams& params);

/// 4-connected components over non-edge pixels. Components smaller than
/// min_segment_area collapse to label 0.
SegmentsMask connected_components(const Mask& edges, int min_segment_area);

/// Per-segment intersection counts between a pixel set and the segment
/// labels; result[l] = |{p : select(p) && labels(p) == l}| for l in
/// [0, segment_count]. Shared by instance assignment and motion completion.
std::vector<int> segment_intersection_counts(const SegmentsMask& segments, const Mask& select);

namespace serial {
Mask compute_edge_mask(const Frame& frame, const SegmentationParams& params);
}  // namespace serial

}  // namespace dynsurf
