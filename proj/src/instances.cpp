#include "dynsurf/instances.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dynsurf {

namespace {

BBox clamp_box(const Detection& d, int w, int h) {
  BBox b;
  b.x = std::max(0, int(std::floor(d.x)));
  b.y = std::max(0, int(std::floor(d.y)));
  b.w = std::min(w, int(std::ceil(d.x + d.w))) - b.x;
  b.h = std::min(h, int(std::ceil(d.y + d.h))) - b.y;
  b.w = std::max(0, b.w);
  b.h = std::max(0, b.h);
  return b;
}

}  // namespace

ObjectSegmentsMask assign_detections(const SegmentsMask& segments,
                                     const std::vector<Detection>& detections,
                                     const InstanceParams& params) {
  const int w = segments.width(), h = segments.height();
  ObjectSegmentsMask out;
  out.instance_labels = LabelImage(w, h, 0);

  std::vector<int> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double area_a = detections[a].w * detections[a].h;
    const double area_b = detections[b].w * detections[b].h;
    if (area_a != area_b) return area_a < area_b;  // ascending area
    if (detections[a].score != detections[b].score) return detections[a].score > detections[b].score;
    return a < b;
  });

  std::vector<std::int32_t> segment_owner(segments.segment_count + 1, 0);  // 0 = unassigned
  std::vector<std::vector<int>> assigned_segments;

  for (int det_idx : order) {
    const Detection& det = detections[det_idx];
    const BBox box = clamp_box(det, w, h);
    std::vector<int> inter(segments.segment_count + 1, 0);
    for (int y = box.y; y < box.y + box.h; ++y) {
      const std::int32_t* row = segments.labels.row(y);
      for (int x = box.x; x < box.x + box.w; ++x) ++inter[row[x]];
    }
    const double box_area = double(box.w) * double(box.h);
    std::vector<int> mine;
    for (int s = 1; s <= segments.segment_count; ++s) {
      if (segment_owner[s] || inter[s] == 0) continue;
      const double seg_area = segments.areas[s];
      const double score = params.metric == OverlapMetric::kIntersectionOverSegment
                               ? inter[s] / seg_area
                               : inter[s] / (seg_area + box_area - inter[s]);
      if (score >= params.overlap_threshold) mine.push_back(s);
    }
    if (mine.empty() && !params.allow_empty_instances) continue;
    InstanceInfo info;
    info.instance_id = int(out.instances.size()) + 1;
    info.class_id = det.class_id;
    info.class_name = det.class_name;
    info.rigid = det.rigid;
    info.score = det.score;
    info.bbox = box;
    for (int s : mine) {
      segment_owner[s] = info.instance_id;
      info.pixel_count += segments.areas[s];
    }
    out.instances.push_back(std::move(info));
    assigned_segments.push_back(std::move(mine));
  }

  for (std::size_t i = 0; i < out.instance_labels.size(); ++i) {
    out.instance_labels[i] = segment_owner[segments.labels[i]];
  }
  return out;
}

void split_rigid_nonrigid(const ObjectSegmentsMask& mask, Mask& rigid, Mask& nonrigid) {
  rigid = Mask(mask.width(), mask.height(), 0);
  nonrigid = Mask(mask.width(), mask.height(), 0);
  std::vector<std::uint8_t> is_rigid(mask.instances.size() + 1, 0);
  for (const auto& inst : mask.instances) is_rigid[inst.instance_id] = inst.rigid ? 1 : 0;
  for (std::size_t i = 0; i < mask.instance_labels.size(); ++i) {
    const std::int32_t l = mask.instance_labels[i];
    if (l == 0) continue;
    (is_rigid[l] ? rigid[i] : nonrigid[i]) = 1;
  }
}

}  // namespace dynsurf
