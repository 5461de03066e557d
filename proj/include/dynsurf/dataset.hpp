#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dynsurf/frame.hpp"
#include "dynsurf/geometry.hpp"

namespace dynsurf {

/// Class-labeled 2D detection with its rigidity flag from the category table.
struct Detection {
  int class_id = 0;
  std::string class_name;
  double score = 0.0;
  double x = 0, y = 0, w = 0, h = 0;  // pixels, clamped to image bounds
  bool rigid = true;
};

/// class_name -> rigid lookup. Unknown classes are treated as rigid (with a
/// warning at the call site). Default table marks "person" non-rigid.
class CategoryTable {
 public:
  static CategoryTable default_table();
  static CategoryTable load(const std::string& path);

  bool rigid(const std::string& class_name) const;
  bool known(const std::string& class_name) const { return table_.count(class_name) != 0; }

 private:
  std::map<std::string, bool> table_;
};

struct SequenceEntry {
  double timestamp = 0;
  std::string rgb_path;
  std::string depth_path;
  std::string detections_path;  // empty when absent
};

struct SequenceIndex {
  std::vector<SequenceEntry> entries;
  Intrinsics intrinsics;
  std::string groundtruth_path;  // empty when absent
};

/// Loads a TUM-layout sequence (rgb.txt / depth.txt with "timestamp filename"
/// lines) and associates the two streams greedily by nearest timestamp, each
/// entry used at most once. If detections_dir is nonempty, per-frame files
/// "<timestamp:.6f>.det" are referenced when present. Reads intrinsics.txt
/// when the directory carries one.
SequenceIndex load_tum_sequence(const std::string& dir_path, double max_assoc_gap,
                                const std::string& detections_dir = {});

/// Greedy nearest-timestamp association; returns index pairs into a and b.
/// Symmetric in its arguments.
std::vector<std::pair<int, int>> associate_timestamps(const std::vector<double>& a,
                                                      const std::vector<double>& b,
                                                      double max_gap);

struct DetectionParams {
  double score_min = 0.5;
  int image_width = 640;
  int image_height = 480;
};

/// Parses a .det file ("class_id class_name score x y w h" lines, '#'
/// comments). A missing file yields an empty list; malformed lines throw with
/// the line number. Boxes are clamped to image bounds and filtered by score.
std::vector<Detection> load_detections(const std::string& path, const CategoryTable& categories,
                                       const DetectionParams& params);

/// Decodes a frame of the sequence (RGB image + 16-bit depth PNG divided by
/// depth_scale) and derives its geometry.
Frame load_frame(const SequenceEntry& entry, const Intrinsics& K, const DepthRange& range = {});

struct TrajectoryRecord {
  double timestamp = 0;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();  // unit

  static TrajectoryRecord from_pose(double t, const Pose& p);
  Pose pose() const;
};

/// TUM trajectory format: "timestamp tx ty tz qx qy qz qw", 6 decimals.
void save_trajectory(const std::string& path, const std::vector<TrajectoryRecord>& records);
std::vector<TrajectoryRecord> load_trajectory(const std::string& path);

}  // namespace dynsurf
