#pragma once

#include <string>

#include "dynsurf/dataset.hpp"
#include "dynsurf/instances.hpp"
#include "dynsurf/motion.hpp"
#include "dynsurf/segmentation.hpp"
#include "dynsurf/surfel_map.hpp"
#include "dynsurf/tracking.hpp"

namespace dynsurf {

/// Every tunable of the pipeline, grouped the way the config file sections
/// are ("[section]" headers over flat key = value lines). Unknown keys are
/// rejected on load.
struct PipelineConfig {
  Intrinsics camera;
  DepthRange depth;

  struct Dataset {
    std::string path;
    std::string detections_dir;
    std::string category_table;  // empty = built-in default table
    double max_assoc_gap = 0.02;
    double score_min = 0.5;
  } dataset;

  SegmentationParams segmentation;
  InstanceParams instance;
  TrackingParams tracking;
  MotionParams motion;
  bool motion_enabled = true;
  FusionParams mapping;

  struct Pipeline {
    std::string output_dir;
    bool instrumentation = true;
    bool detections_enabled = true;
    bool dump_masks = false;
    bool dump_residuals = false;
  } pipeline;
};

PipelineConfig load_config(const std::string& path);

/// Applies one "section.key=value" override; throws on unknown keys or bad
/// values.
void apply_override(PipelineConfig& config, const std::string& assignment);

void validate_config(const PipelineConfig& config);

}  // namespace dynsurf
