#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "dynsurf/dataset.hpp"

namespace dynsurf {

struct AteReport {
  double rmse = 0, mean = 0, median = 0, max = 0;  // meters
  bool aligned = true;
  int pairs_used = 0;
};

/// Least-squares rigid alignment (rotation + translation, no scale) of src
/// onto dst. Both lists must have equal size >= 2.
Pose align_rigid(const std::vector<Eigen::Vector3d>& src, const std::vector<Eigen::Vector3d>& dst);

/// Absolute trajectory error: timestamps associated greedily within
/// max_assoc_gap, positions rigidly aligned, RMSE of the residual norms.
/// Throws when fewer than two pairs associate.
AteReport ate_rmse(const std::vector<TrajectoryRecord>& estimated,
                   const std::vector<TrajectoryRecord>& ground_truth, double max_assoc_gap);

struct CloudCompareReport {
  double accuracy = 0;      // fraction of reconstructed points near the ground truth
  double completeness = 0;  // fraction of ground-truth points near the reconstruction
  double threshold = 0;     // meters
};

/// Chamfer-style inlier ratios at the given distance threshold, optionally
/// after point-to-point ICP pre-alignment of the reconstruction onto the
/// ground truth. Throws on empty input clouds.
CloudCompareReport cloud_compare(std::vector<Eigen::Vector3f> reconstructed,
                                 const std::vector<Eigen::Vector3f>& ground_truth,
                                 double inlier_threshold, bool align);

/// Uniform hash grid answering "any point within r" queries exactly for
/// r <= cell size.
class PointGrid {
 public:
  PointGrid(const std::vector<Eigen::Vector3f>& points, double cell);
  bool any_within(const Eigen::Vector3f& p, double r) const;

 private:
  double cell_;
  Eigen::Vector3f origin_;
  int nx_ = 0, ny_ = 0, nz_ = 0;
  std::vector<std::vector<std::int32_t>> cells_;
  const std::vector<Eigen::Vector3f>* points_;
};

/// Count of query points with a neighbor within threshold. OpenMP-parallel;
/// serial::count_within is the reference.
std::size_t count_within(const std::vector<Eigen::Vector3f>& queries, const PointGrid& grid,
                         double threshold);

namespace serial {
std::size_t count_within(const std::vector<Eigen::Vector3f>& queries,
                         const std::vector<Eigen::Vector3f>& targets, double threshold);
}  // namespace serial

// ---- per-stage timing -------------------------------------------------

namespace stage_names {
inline constexpr const char* kInitialTracking = "Initial Tracking";
inline constexpr const char* kGeometricSegmentation = "Geometric segmentation";
inline constexpr const char* kObjectDetection = "Object Detection";
inline constexpr const char* kMotionSegmentation = "Motion Segmentation";
inline constexpr const char* kObjectMaskGeneration = "Object Mask Generation";
inline constexpr const char* kPoseRefinement = "Camera Pose refinement";
inline constexpr const char* kMapping = "Mapping";
}  // namespace stage_names

/// True for stages whose cost scales with the number of maps.
bool stage_is_per_model(const std::string& name);

struct FrameTiming {
  std::vector<std::pair<std::string, double>> stages;  // (name, ms)
  int model_count = 1;
  double total_ms = 0;
};

struct StageRow {
  std::string name;
  double mean_ms = 0;
  bool per_model = false;
};

struct TimingReport {
  std::vector<StageRow> rows;
  double base_ms = 0;       // mean frame time excluding per-model stages
  double per_model_ms = 0;  // mean per-model increment
  int frames = 0;

  std::string plain_text() const;
  std::string key_values() const;
};

TimingReport timing_report(const std::vector<FrameTiming>& frames);

}  // namespace dynsurf
