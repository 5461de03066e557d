#pragma once

#include <string>
#include <vector>

#include "dynsurf/dataset.hpp"
#include "dynsurf/frame.hpp"

namespace dynsurf {

/// View-independent procedural shading so surfel colors stay photometrically
/// consistent across viewpoints; sine product over entity-local coordinates.
struct ProceduralTexture {
  Rgb8 base{200, 200, 200};
  double freq_u = 18.0;  // radians per meter
  double freq_v = 15.0;
  double amp = 0.45;     // shade varies in [1-amp, 1]
};

struct SceneEntity {
  enum class Kind { kBox, kRect };
  Kind kind = Kind::kBox;
  int id = 0;
  Eigen::Vector3d half_extent{0.5, 0.5, 0.5};  // kRect uses x/y, surface at local z=0
  Pose base_pose;                              // entity -> world at t = 0
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // m/s, active in [motion_start, motion_stop]
  double motion_start = 0.0;                           // seconds
  double motion_stop = std::numeric_limits<double>::infinity();
  ProceduralTexture texture;
  std::string class_name;
  bool emit_detection = false;

  Pose pose_at(double t) const;
};

struct CameraPath {
  enum class Kind { kStatic, kArc };
  Kind kind = Kind::kStatic;
  Eigen::Vector3d start = Eigen::Vector3d::Zero();
  Eigen::Vector3d target{0, 0, 2.0};  // look-at point
  double amp_x = 0.12, amp_y = 0.05, amp_z = 0.04;
  double period = 8.0;  // seconds per arc cycle

  Pose pose_at(double t) const;  // camera -> world
};

Pose look_at_pose(const Eigen::Vector3d& position, const Eigen::Vector3d& target);

struct SyntheticScene {
  std::vector<SceneEntity> entities;
  CameraPath camera;
  Intrinsics K;
  int frame_count = 100;
  double fps = 30.0;
  double depth_noise_sigma0 = 0.0;  // sigma = sigma0 * depth^2
  std::uint64_t seed = 1;

  double timestamp(int frame) const { return frame / fps; }
};

struct RenderedFrame {
  double timestamp = 0;
  GrayF depth;             // meters, 0 = no hit
  ColorImage rgb;
  LabelImage entity_mask;  // entity id, -1 = background / no hit
};

/// Analytic ray casting of the scene (OpenMP-parallel over rows), followed by
/// a deterministic serial noise pass. Throws if the camera sits inside a box.
RenderedFrame render_scene_frame(const SyntheticScene& scene, int frame);

namespace serial {
RenderedFrame render_scene_frame(const SyntheticScene& scene, int frame);
}  // namespace serial

Frame rendered_to_frame(const RenderedFrame& rendered, const Intrinsics& K,
                        const DepthRange& range = {});

/// Ground-truth detections from the rendered entity mask (tight bounding
/// boxes of entities with emit_detection set).
std::vector<Detection> detections_from_mask(const RenderedFrame& rendered,
                                            const SyntheticScene& scene,
                                            const CategoryTable& categories,
                                            int min_pixels = 25);

/// Surface samples of the entity at time t, in world coordinates.
std::vector<Eigen::Vector3f> sample_entity_surface(const SceneEntity& entity, double spacing,
                                                   double t);

/// Writes a TUM-layout dataset: rgb/, depth/ (16-bit PNG), rgb.txt,
/// depth.txt, groundtruth.txt, intrinsics.txt, plus optional per-frame .det
/// files, entity-id mask PNGs, and ground-truth model PLYs for detected or
/// moving entities.
void write_synthetic_dataset(const SyntheticScene& scene, const std::string& out_dir,
                             bool with_detections, bool with_masks);

/// Static preset: textured back wall, tilted side wall and three boxes,
/// smooth camera arc.
SyntheticScene make_static_scene(const Intrinsics& K, int frames);

/// Two-body preset: the static scene plus a textured panel that rests for
/// the first third of the sequence and then approaches the camera fast
/// enough that its per-frame point-to-plane mismatch clears the static
/// guard of the motion clustering from the first moving frame on.
SyntheticScene make_two_body_scene(const Intrinsics& K, int frames);

}  // namespace dynsurf
