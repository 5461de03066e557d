#include "dynsurf/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dynsurf {

namespace {

inline void edge_row(const Frame& f, double theta_dist, double cos_angle, int y, Mask& edges) {
  const int w = f.width();
  const int h = f.height();
  std::uint8_t* out = edges.row(y);
  for (int x = 0; x < w; ++x) {
    if (!f.valid(x, y)) {
      out[x] = 1;
      continue;
    }
    const Eigen::Vector3f v = f.vertex(x, y);
    const Eigen::Vector3f n = f.normal(x, y);
    bool edge = false;
    for (int dy = -1; dy <= 1 && !edge; ++dy) {
      for (int dx = -1; dx <= 1 && !edge; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int qx = x + dx, qy = y + dy;
        if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
        if (!f.valid(qx, qy)) continue;
        const float dist = std::abs((f.vertex(qx, qy) - v).dot(n));
        if (dist > theta_dist) {
          edge = true;
        } else if (n.dot(f.normal(qx, qy)) < cos_angle) {
          edge = true;
        }
      }
    }
    out[x] = edge ? 1 : 0;
  }
}

}  // namespace

Mask compute_edge_mask(const Frame& frame, const SegmentationParams& params) {
  Mask edges(frame.width(), frame.height());
  const double cos_angle = std::cos(params.theta_angle_deg * M_PI / 180.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < frame.height(); ++y) edge_row(frame, params.theta_dist, cos_angle, y, edges);
  return edges;
}

namespace serial {
Mask compute_edge_mask(const Frame& frame, const SegmentationParams& params) {
  Mask edges(frame.width(), frame.height());
  const double cos_angle = std::cos(params.theta_angle_deg * M_PI / 180.0);
  for (int y = 0; y < frame.height(); ++y) edge_row(frame, params.theta_dist, cos_angle, y, edges);
  return edges;
}
}  // namespace serial

SegmentsMask connected_components(const Mask& edges, int min_segment_area) {
  const int w = edges.width(), h = edges.height();
  SegmentsMask out;
  out.labels = LabelImage(w, h, 0);

  // Scanline flood fill; provisional labels start at 1 in scan order.
  LabelImage provisional(w, h, 0);
  std::vector<int> area;          // per provisional label
  std::vector<int> first_pixel;   // scan index of the seed, for stable ordering
  std::vector<std::int32_t> stack;
  int next = 0;
  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      if (edges(sx, sy) || provisional(sx, sy)) continue;
      ++next;
      area.push_back(0);
      first_pixel.push_back(sy * w + sx);
      stack.clear();
      stack.push_back(sy * w + sx);
      provisional(sx, sy) = next;
      while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        ++area[next - 1];
        const int x = idx % w, y = idx / w;
        const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
        for (auto& q : nb) {
          if (q[0] < 0 || q[1] < 0 || q[0] >= w || q[1] >= h) continue;
          if (edges(q[0], q[1]) || provisional(q[0], q[1])) continue;
          provisional(q[0], q[1]) = next;
          stack.push_back(q[1] * w + q[0]);
        }
      }
    }
  }

  // Order surviving components by decreasing area (ties by seed position).
  std::vector<int> order(next);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (area[a] != area[b]) return area[a] > area[b];
    return first_pixel[a] < first_pixel[b];
  });
  std::vector<std::int32_t> remap(next + 1, 0);
  std::vector<int> final_areas{0};
  int label = 0;
  for (int p : order) {
    if (area[p] < min_segment_area) break;  // sorted, so the rest are smaller
    remap[p + 1] = ++label;
    final_areas.push_back(area[p]);
  }
  out.segment_count = label;
  std::size_t unlabeled = 0;
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    out.labels[i] = remap[provisional[i]];
    unlabeled += out.labels[i] == 0;
  }
  final_areas[0] = int(unlabeled);
  out.areas = std::move(final_areas);
  return out;
}

std::vector<int> segment_intersection_counts(const SegmentsMask& segments, const Mask& select) {
  std::vector<int> counts(segments.segment_count + 1, 0);
  for (std::size_t i = 0; i < select.size(); ++i) {
    if (select[i]) ++counts[segments.labels[i]];
  }
  return counts;
}

}  // namespace dynsurf
