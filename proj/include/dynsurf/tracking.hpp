#pragma once

#include <array>
#include <map>
#include <optional>
#include <vector>

#include "dynsurf/frame.hpp"
#include "dynsurf/surfel_map.hpp"

namespace dynsurf {

/// One resolution level of a frame or rendered reference.
struct PyramidLevel {
  GrayF intensity;
  GrayF depth;
  Image<Eigen::Vector3f> vertex;
  Image<Eigen::Vector3f> normal;
  Mask valid;
  Intrinsics K;

  int width() const { return valid.width(); }
  int height() const { return valid.height(); }
};

/// Map render used as the alignment target. render_pose is the camera-to-map
/// transform the render was made from; the tracked pose composes on top of it.
struct ReferenceFrame {
  int map_id = 0;
  Pose render_pose;
  std::vector<PyramidLevel> pyramid;  // [0] = finest
  int valid_count = 0;                // valid pixels at the finest level
};

struct TrackingParams {
  int pyramid_levels = 3;
  std::array<int, 3> iterations{10, 5, 4};  // coarse -> fine
  double rgb_weight = 0.1;                  // lambda of the joint cost
  double dist_thresh = 0.10;                // meters, correspondence rejection
  double angle_thresh_deg = 30.0;
  double twist_eps = 1e-6;                  // early exit on update norm
  int max_step_halvings = 4;
  int min_inliers = 2000;        // at 640x480, scaled by level pixel count
  int min_visible_pixels = 3000; // at 640x480, scaled by resolution
  // Saturation value for the residual map: broken associations and
  // mismatches larger than this read as a uniform full-scale value, keeping
  // the downstream residual clustering on one scale.
  double residual_cap = 5e-3;    // squared meters
};

struct StepRecord {
  int level = 0;
  double cost_before = 0;
  double cost_after = 0;
};

struct TrackingResult {
  Pose pose;              // camera-to-map
  GrayF residual;         // squared point-to-plane residual, -1 = no correspondence
  int inlier_count = 0;
  bool converged = false;
  bool visible = true;
  int iterations_used = 0;
  std::vector<StepRecord> steps;  // accepted Gauss-Newton steps
};

std::vector<PyramidLevel> build_frame_pyramid(const Frame& frame, int levels);

/// Splats the map into the view at cam_to_map (nearest depth wins) and
/// derives the alignment pyramid. An empty map yields a fully invalid
/// reference.
ReferenceFrame render_reference(const SurfelMap& map, const Pose& cam_to_map, const Intrinsics& K,
                                int levels = 3);

/// Reference built directly from a frame (identity render pose). Used by
/// tests and as a frame-to-frame fallback.
ReferenceFrame reference_from_frame(const Frame& frame, int levels = 3);

/// Joint photometric + geometric alignment problem with the projective data
/// association frozen at construction. Exposed so tests can differentiate the
/// exact cost the solver linearizes.
class TrackingProblem {
 public:
  struct Correspondence {
    Eigen::Vector3d v_cur;
    Eigen::Vector3d v_ref;
    Eigen::Vector3d n_ref;
    double i_cur = 0;
    int cur_index = 0;  // pixel index at this level
  };

  TrackingProblem(const PyramidLevel& ref, const PyramidLevel& cur, const Mask* invalid,
                  const Pose& T, const TrackingParams& params);

  int count() const { return int(corr_.size()); }
  std::vector<Correspondence>& correspondences() { return corr_; }

  /// Mean joint cost over the frozen correspondences.
  double cost(const Pose& T) const;

  /// Mean cost and its exact gradient w.r.t. a left-multiplied twist
  /// increment ([v; omega] layout).
  double cost_and_gradient(const Pose& T, Vector6d& gradient) const;

  /// Gauss-Newton normal equations with a fixed-order (per-row) parallel
  /// reduction; bit-reproducible for any thread count.
  double normal_equations(const Pose& T, Matrix6d& JtJ, Vector6d& Jtr) const;

 private:
  const PyramidLevel& ref_;
  double lambda_;
  std::vector<Correspondence> corr_;
  std::vector<std::pair<int, int>> row_ranges_;  // [begin,end) per image row
};

/// Coarse-to-fine Gauss-Newton alignment of the current frame against the
/// reference, warm-started at init (camera-to-map). Pixels under the
/// optional invalid mask are excluded. Fewer inliers than the scaled
/// threshold at any level aborts with pose == init.
TrackingResult track(const ReferenceFrame& reference, const std::vector<PyramidLevel>& current,
                     const Pose& init, const Mask* invalid_mask, const TrackingParams& params);

TrackingResult track(const ReferenceFrame& reference, const Frame& current, const Pose& init,
                     const Mask* invalid_mask, const TrackingParams& params);

/// Stage 1: per-map tracking without the invalid mask. Maps whose reference
/// covers fewer than the scaled min_visible_pixels are reported not visible
/// with their pose carried forward. Returns result plus the rendered static
/// reference (map 0) for reuse in stage 2.
struct MultiTrackOutput {
  std::map<int, TrackingResult> results;
  std::optional<ReferenceFrame> static_reference;
};
MultiTrackOutput track_all_maps(const std::vector<SurfelMap>& maps,
                                const std::map<int, Pose>& previous_poses,
                                const std::vector<PyramidLevel>& current,
                                const TrackingParams& params);

/// Stage 2: static-map refinement starting from the stage-1 pose with the
/// invalid mask applied.
TrackingResult refine_static_pose(const ReferenceFrame& static_reference,
                                  const std::vector<PyramidLevel>& current,
                                  const TrackingResult& stage1, const Mask& invalid,
                                  const TrackingParams& params);

namespace serial {
/// Straightforward sequential accumulation of the normal equations; the
/// reference for the parallel reduction.
double normal_equations(const std::vector<TrackingProblem::Correspondence>& corr,
                        const PyramidLevel& ref, double lambda, const Pose& T, Matrix6d& JtJ,
                        Vector6d& Jtr);
}  // namespace serial

}  // namespace dynsurf
