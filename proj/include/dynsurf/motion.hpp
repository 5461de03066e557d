#pragma once

#include <span>
#include <vector>

#include "dynsurf/image.hpp"
#include "dynsurf/segmentation.hpp"

namespace dynsurf {

struct MotionParams {
  double min_dynamic_centroid = 2.5e-3;  // squared meters; below this the scene counts as static
  double overlap_threshold = 0.3;        // binary-mask coverage that marks a whole segment
  int kmeans_max_iters = 50;
  int max_samples = 20000;               // uniform-stride subsample for clustering
};

struct KMeans2Result {
  double static_centroid = 0;
  double dynamic_centroid = 0;
  bool degenerate = false;            // all samples identical
  std::vector<std::uint8_t> labels;   // 1 = dynamic cluster
};

/// 1-D 2-means (Lloyd) with deterministic min/max initialization. Centroids
/// come back sorted ascending; the larger one is the dynamic cluster.
KMeans2Result kmeans2(std::span<const float> values, int max_iters);

struct BinaryMotionMask {
  Mask bits;
  double static_centroid = 0;
  double dynamic_centroid = 0;
  bool empty_scene = true;  // static guard fired or clustering degenerate
};

/// Clusters the stage-1 static-map residuals into static/dynamic. If the
/// dynamic centroid stays below min_dynamic_centroid the scene is treated as
/// static and the mask is empty.
BinaryMotionMask binary_motion_mask(const GrayF& residual_map, const MotionParams& params);

/// Completes partial detections to whole geometric segments: a segment is
/// marked dynamic iff |segment ∩ binary| / |segment| >= overlap_threshold.
/// Edge pixels (label 0) are never marked.
Mask motion_segments(const BinaryMotionMask& binary, const SegmentsMask& segments,
                     double overlap_threshold);

}  // namespace dynsurf
