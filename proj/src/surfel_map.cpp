#include "dynsurf/surfel_map.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace dynsurf {

float surfel_radius(float depth, float normal_z, const Intrinsics& K) {
  const float nz = std::min(1.0f, std::max(0.5f, std::abs(normal_z)));
  return depth * float(M_SQRT2) / (float(K.fx) * nz);
}

LabelImage render_index_map(const SurfelMap& map, const Pose& cam_to_map, const Intrinsics& K,
                            bool active_only) {
  LabelImage index(K.width, K.height, -1);
  GrayF zbuf(K.width, K.height, std::numeric_limits<float>::infinity());
  const Pose map_to_cam = cam_to_map.inverse();
  const Eigen::Matrix3f R = map_to_cam.R.cast<float>();
  const Eigen::Vector3f t = map_to_cam.t.cast<float>();
  for (std::size_t i = 0; i < map.surfels.size(); ++i) {
    const Surfel& s = map.surfels[i];
    if (active_only && !s.active) continue;
    const Eigen::Vector3f p = R * s.position + t;
    if (p.z() <= 1e-6f) continue;
    const int u = int(std::lround(K.fx * p.x() / p.z() + K.cx));
    const int v = int(std::lround(K.fy * p.y() / p.z() + K.cy));
    if (u < 0 || v < 0 || u >= K.width || v >= K.height) continue;
    if (p.z() < zbuf(u, v)) {
      zbuf(u, v) = p.z();
      index(u, v) = std::int32_t(i);
    }
  }
  return index;
}

Mask project_map_mask(const SurfelMap& map, const Pose& cam_to_map, const Intrinsics& K,
                      double occlusion_tol) {
  Mask mask(K.width, K.height, 0);
  GrayF zbuf(K.width, K.height, std::numeric_limits<float>::infinity());
  const Pose map_to_cam = cam_to_map.inverse();
  const Eigen::Matrix3f R = map_to_cam.R.cast<float>();
  const Eigen::Vector3f t = map_to_cam.t.cast<float>();
  std::vector<std::pair<std::int32_t, float>> splats;  // pixel index, depth
  splats.reserve(map.surfels.size());
  for (const Surfel& s : map.surfels) {
    const Eigen::Vector3f p = R * s.position + t;
    if (p.z() <= 1e-6f) continue;
    const int u = int(std::lround(K.fx * p.x() / p.z() + K.cx));
    const int v = int(std::lround(K.fy * p.y() / p.z() + K.cy));
    if (u < 0 || v < 0 || u >= K.width || v >= K.height) continue;
    zbuf(u, v) = std::min(zbuf(u, v), p.z());
    splats.push_back({v * K.width + u, p.z()});
  }
  for (auto [idx, z] : splats) {
    if (z <= zbuf[idx] + float(occlusion_tol)) mask[idx] = 1;
  }
  return mask;
}

MapObjectMatches match_maps_to_objects(const std::vector<std::pair<int, Mask>>& map_masks,
                                       const ObjectSegmentsMask& objects, double match_threshold) {
  MapObjectMatches result;
  std::vector<const InstanceInfo*> rigid;
  for (const auto& inst : objects.instances) {
    if (inst.rigid && inst.pixel_count > 0) rigid.push_back(&inst);
  }

  struct Pair {
    double overlap;
    int map_id, instance_id;
  };
  std::vector<Pair> pairs;
  for (const auto& [map_id, mask] : map_masks) {
    std::vector<int> inter(objects.instances.size() + 1, 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) ++inter[objects.instance_labels[i]];
    }
    for (const InstanceInfo* inst : rigid) {
      const double overlap = double(inter[inst->instance_id]) / double(inst->pixel_count);
      if (overlap >= match_threshold) pairs.push_back({overlap, map_id, inst->instance_id});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    if (a.map_id != b.map_id) return a.map_id < b.map_id;
    return a.instance_id < b.instance_id;
  });

  std::vector<int> map_taken, inst_taken;
  for (const Pair& p : pairs) {
    if (std::count(map_taken.begin(), map_taken.end(), p.map_id) ||
        std::count(inst_taken.begin(), inst_taken.end(), p.instance_id)) {
      continue;
    }
    map_taken.push_back(p.map_id);
    inst_taken.push_back(p.instance_id);
    result.matches.push_back({p.map_id, p.instance_id});
  }
  for (const InstanceInfo* inst : rigid) {
    if (!std::count(inst_taken.begin(), inst_taken.end(), inst->instance_id)) {
      result.unmatched_objects.push_back(inst->instance_id);
    }
  }
  for (const auto& [map_id, mask] : map_masks) {
    if (!std::count(map_taken.begin(), map_taken.end(), map_id)) {
      result.unmatched_maps.push_back(map_id);
    }
  }
  return result;
}

void fuse_pixels_into_map(SurfelMap& map, const Frame& frame, const Mask& select,
                          const Pose& cam_to_map, int frame_index, const FusionParams& params,
                          FusionStats& stats) {
  const LabelImage index = render_index_map(map, cam_to_map, frame.K, /*active_only=*/true);
  const Eigen::Matrix3f R = cam_to_map.R.cast<float>();
  const Eigen::Vector3f t = cam_to_map.t.cast<float>();
  const float assoc_dist2 = float(params.assoc_dist * params.assoc_dist);
  const float cos_assoc = float(std::cos(params.assoc_angle_deg * M_PI / 180.0));
  const float w_new = float(params.w_new);

  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      if (!select(x, y) || !frame.valid(x, y)) continue;
      const Eigen::Vector3f pos = R * frame.vertex(x, y) + t;
      const Eigen::Vector3f nrm = R * frame.normal(x, y);
      const float radius = surfel_radius(frame.depth(x, y), frame.normal(x, y).z(), frame.K);
      const std::int32_t si = index(x, y);
      if (si >= 0) {
        Surfel& s = map.surfels[si];
        if ((s.position - pos).squaredNorm() <= assoc_dist2 && s.normal.dot(nrm) >= cos_assoc) {
          const float w = s.weight;
          const float inv = 1.0f / (w + w_new);
          s.position = (w * s.position + w_new * pos) * inv;
          Eigen::Vector3f n = w * s.normal + w_new * nrm;
          const float len = n.norm();
          if (len > 1e-12f) s.normal = n / len;
          const Rgb8 c = frame.rgb.empty() ? Rgb8{} : frame.rgb(x, y);
          s.color.r = std::uint8_t((w * s.color.r + w_new * c.r) * inv + 0.5f);
          s.color.g = std::uint8_t((w * s.color.g + w_new * c.g) * inv + 0.5f);
          s.color.b = std::uint8_t((w * s.color.b + w_new * c.b) * inv + 0.5f);
          s.radius = std::min(s.radius, radius);  // surfels only sharpen
          s.weight = w + w_new;
          s.last_updated = frame_index;
          ++stats.updated;
          continue;
        }
      }
      Surfel s;
      s.position = pos;
      s.normal = nrm;
      s.color = frame.rgb.empty() ? Rgb8{} : frame.rgb(x, y);
      s.radius = radius;
      s.weight = w_new;
      s.created_at = frame_index;
      s.last_updated = frame_index;
      map.surfels.push_back(s);
      ++stats.added;
    }
  }

  for (Surfel& s : map.surfels) {
    s.active = (frame_index - s.last_updated) <= params.inactive_timeout;
  }
}

void shrink_unmatched_map(SurfelMap& map, const Frame& frame, const Mask& instance_free,
                          const Pose& cam_to_map, int frame_index, const FusionParams& params,
                          FusionStats& stats) {
  const LabelImage index = render_index_map(map, cam_to_map, frame.K, /*active_only=*/false);
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      const std::int32_t si = index(x, y);
      if (si < 0) continue;
      if (!frame.valid(x, y) || !instance_free(x, y)) continue;
      map.surfels[si].weight -= float(params.w_new);
    }
  }
  const auto stale = [&](const Surfel& s) {
    return s.weight < float(params.cull_weight) &&
           frame_index - s.created_at >= params.stability_frames;
  };
  const auto it = std::remove_if(map.surfels.begin(), map.surfels.end(), stale);
  stats.culled += int(map.surfels.end() - it);
  map.surfels.erase(it, map.surfels.end());
}

MapRegistry::MapRegistry() {
  SurfelMap static_map;
  static_map.map_id = 0;
  static_map.kind = MapKind::kStatic;
  maps_.push_back(std::move(static_map));
}

SurfelMap* MapRegistry::find(int map_id) {
  for (auto& m : maps_) {
    if (m.map_id == map_id) return &m;
  }
  return nullptr;
}

SurfelMap& MapRegistry::create_object_map(const std::string& class_name, const Pose& cam_to_map,
                                          int frame_index) {
  SurfelMap m;
  m.map_id = next_id_++;
  m.kind = MapKind::kObject;
  m.class_name = class_name;
  m.cam_pose = cam_to_map;
  m.created_frame = frame_index;
  m.last_visible_frame = frame_index;
  maps_.push_back(std::move(m));
  return maps_.back();
}

FusionStats fuse_frame(MapRegistry& registry, const Frame& frame,
                       const ObjectSegmentsMask& instances, const Mask& invalid,
                       const Mask* edges, const MapObjectMatches& matches,
                       const std::map<int, Pose>& poses, int frame_index,
                       const FusionParams& params) {
  FusionStats stats;
  const int w = frame.width(), h = frame.height();

  const auto instance_select = [&](int instance_id) {
    Mask select(w, h, 0);
    for (std::size_t i = 0; i < select.size(); ++i) {
      select[i] = instances.instance_labels[i] == instance_id ? 1 : 0;
    }
    return select;
  };

  // Case 1: matched map <-> object.
  for (auto [map_id, instance_id] : matches.matches) {
    SurfelMap* map = registry.find(map_id);
    const auto pose_it = poses.find(map_id);
    if (!map || pose_it == poses.end()) {
      std::cerr << "warning: no pose for map " << map_id << ", skipping fusion this frame\n";
      continue;
    }
    fuse_pixels_into_map(*map, frame, instance_select(instance_id), pose_it->second, frame_index,
                         params, stats);
  }

  // Case 2: unmatched rigid object -> new map, if large enough.
  for (int instance_id : matches.unmatched_objects) {
    const InstanceInfo* info = nullptr;
    for (const auto& inst : instances.instances) {
      if (inst.instance_id == instance_id) info = &inst;
    }
    if (!info || info->pixel_count < params.min_object_pixels) continue;
    const auto pose_it = poses.find(0);
    if (pose_it == poses.end()) continue;
    SurfelMap& map = registry.create_object_map(info->class_name, pose_it->second, frame_index);
    fuse_pixels_into_map(map, frame, instance_select(instance_id), map.cam_pose, frame_index,
                         params, stats);
    ++stats.maps_created;
  }

  // Case 3: unmatched visible map -> shrink.
  Mask instance_free(w, h, 0);
  for (std::size_t i = 0; i < instance_free.size(); ++i) {
    instance_free[i] = (instances.instance_labels[i] == 0 && !invalid[i]) ? 1 : 0;
  }
  for (int map_id : matches.unmatched_maps) {
    SurfelMap* map = registry.find(map_id);
    const auto pose_it = poses.find(map_id);
    if (!map || pose_it == poses.end()) continue;
    shrink_unmatched_map(*map, frame, instance_free, pose_it->second, frame_index, params, stats);
  }

  // Case 4: remaining pixels -> static map.
  Mask static_select(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!frame.valid(x, y) || instances.instance_labels(x, y) != 0) continue;
      if (invalid(x, y)) {
        ++stats.invalid_rejected;
        continue;
      }
      if (!params.fuse_edge_pixels && edges && (*edges)(x, y)) continue;
      static_select(x, y) = 1;
    }
  }
  const auto pose_it = poses.find(0);
  if (pose_it != poses.end()) {
    fuse_pixels_into_map(registry.static_map(), frame, static_select, pose_it->second, frame_index,
                         params, stats);
  } else {
    std::cerr << "warning: no static pose, skipping static fusion this frame\n";
  }
  return stats;
}

}  // namespace dynsurf
