#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dynsurf/frame.hpp"
#include "dynsurf/instances.hpp"

namespace dynsurf {

/// Oriented disk map primitive. Position and normal live in the owning
/// map's frame; weight accumulates observation confidence.
struct Surfel {
  Eigen::Vector3f position = Eigen::Vector3f::Zero();
  Eigen::Vector3f normal = Eigen::Vector3f::UnitZ();
  Rgb8 color;
  float radius = 0.0f;
  float weight = 0.0f;
  int created_at = 0;
  int last_updated = 0;
  bool active = true;
};

enum class MapKind { kStatic, kObject };

/// One reconstructed map. The static map's frame is the world frame; object
/// maps are anchored at the world pose of their creation frame, so object
/// motion lives entirely in the tracked camera-to-map pose.
struct SurfelMap {
  int map_id = 0;
  MapKind kind = MapKind::kStatic;
  std::string class_name;  // nonempty for object maps
  std::vector<Surfel> surfels;
  Pose cam_pose;  // latest tracked camera-to-map transform
  int created_frame = 0;
  int last_visible_frame = 0;
};

struct FusionParams {
  double assoc_dist = 0.05;        // meters
  double assoc_angle_deg = 20.0;
  double w_new = 1.0;
  double cull_weight = 0.5;
  int stability_frames = 10;
  int min_object_pixels = 1000;
  int inactive_timeout = 20;       // frames without update before a surfel goes inactive
  double occlusion_tol = 0.05;     // meters, map-mask depth tolerance
  double match_threshold = 0.3;    // map-mask vs instance overlap
  bool fuse_edge_pixels = false;   // depth-discontinuity pixels are unreliable
};

/// ElasticFusion-style radius: r = d * sqrt(2) / (fx * |clamp(n_z, 0.5, 1)|).
float surfel_radius(float depth, float normal_z, const Intrinsics& K);

/// Z-buffered splat of every surfel (or only active ones) into the camera
/// view; stores the index of the front surfel per pixel, -1 where empty.
LabelImage render_index_map(const SurfelMap& map, const Pose& cam_to_map, const Intrinsics& K,
                            bool active_only);

/// Projection support of the map in the current view: pixels receiving at
/// least one splat within occlusion_tol of the front depth.
Mask project_map_mask(const SurfelMap& map, const Pose& cam_to_map, const Intrinsics& K,
                      double occlusion_tol);

struct MapObjectMatches {
  std::vector<std::pair<int, int>> matches;  // (map_id, instance_id)
  std::vector<int> unmatched_objects;        // instance ids
  std::vector<int> unmatched_maps;           // map ids
};

/// Greedy one-to-one matching by descending |mask ∩ instance| / |instance|,
/// dropping pairs below match_threshold. Only rigid instances participate.
MapObjectMatches match_maps_to_objects(const std::vector<std::pair<int, Mask>>& map_masks,
                                       const ObjectSegmentsMask& objects, double match_threshold);

struct FusionStats {
  int added = 0;
  int updated = 0;
  int invalid_rejected = 0;  // pixels the invalid mask kept out of the static map
  int culled = 0;
  int maps_created = 0;
};

/// Projective association and weighted fusion of the selected pixels into
/// one map. Pixels associate with the front active surfel at their location
/// when within assoc_dist / assoc_angle; otherwise a new surfel is added.
void fuse_pixels_into_map(SurfelMap& map, const Frame& frame, const Mask& select,
                          const Pose& cam_to_map, int frame_index, const FusionParams& params,
                          FusionStats& stats);

/// Weight decay for an unmatched object map: front surfels projecting into
/// validly observed instance-free pixels lose w_new of weight; stale surfels
/// below cull_weight are removed.
void shrink_unmatched_map(SurfelMap& map, const Frame& frame, const Mask& instance_free,
                          const Pose& cam_to_map, int frame_index, const FusionParams& params,
                          FusionStats& stats);

/// Owns the static map (id 0) and all object maps.
class MapRegistry {
 public:
  MapRegistry();
  SurfelMap& static_map() { return maps_.front(); }
  const SurfelMap& static_map() const { return maps_.front(); }
  SurfelMap* find(int map_id);
  SurfelMap& create_object_map(const std::string& class_name, const Pose& cam_to_map,
                               int frame_index);
  std::vector<SurfelMap>& maps() { return maps_; }
  const std::vector<SurfelMap>& maps() const { return maps_; }

 private:
  std::vector<SurfelMap> maps_;
  int next_id_ = 1;
};

/// Per-frame fusion covering the four map/object cases: update matched maps,
/// create maps for unmatched rigid instances, shrink unmatched maps, and fuse
/// the remaining valid non-instance pixels (minus the invalid mask) into the
/// static map.
FusionStats fuse_frame(MapRegistry& registry, const Frame& frame,
                       const ObjectSegmentsMask& instances, const Mask& invalid,
                       const Mask* edges, const MapObjectMatches& matches,
                       const std::map<int, Pose>& poses, int frame_index,
                       const FusionParams& params);

}  // namespace dynsurf
