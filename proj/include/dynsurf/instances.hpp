#pragma once

#include <string>
#include <vector>

#include "dynsurf/dataset.hpp"
#include "dynsurf/segmentation.hpp"

namespace dynsurf {

enum class OverlapMetric {
  kIntersectionOverSegment,  // |segment ∩ box| / |segment|
  kIou,                      // |segment ∩ box| / |segment ∪ box|
};

struct InstanceParams {
  OverlapMetric metric = OverlapMetric::kIntersectionOverSegment;
  double overlap_threshold = 0.5;
  bool allow_empty_instances = false;
};

struct BBox {
  int x = 0, y = 0, w = 0, h = 0;
};

struct InstanceInfo {
  int instance_id = 0;  // label in instance_labels, 1-based
  int class_id = 0;
  std::string class_name;
  bool rigid = true;
  double score = 0.0;
  BBox bbox;  // clamped detection box
  int pixel_count = 0;
};

/// Pixel-accurate instance masks obtained by assigning geometric segments to
/// detection boxes. instance_labels uses 0 for background.
struct ObjectSegmentsMask {
  LabelImage instance_labels;
  std::vector<InstanceInfo> instances;

  int width() const { return instance_labels.width(); }
  int height() const { return instance_labels.height(); }
};

/// Assigns segments to detections: boxes are processed in ascending area
/// order (ties: higher score, then input order) and each still-unassigned
/// segment whose overlap with the box reaches the threshold joins that box's
/// instance. A segment is assigned at most once. Detections that capture no
/// segment produce no instance unless allow_empty_instances is set.
ObjectSegmentsMask assign_detections(const SegmentsMask& segments,
                                     const std::vector<Detection>& detections,
                                     const InstanceParams& params);

/// Partition of the instance support by the rigidity flag.
void split_rigid_nonrigid(const ObjectSegmentsMask& mask, Mask& rigid, Mask& nonrigid);

}  // namespace dynsurf
