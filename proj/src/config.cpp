#include "dynsurf/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace dynsurf {

namespace {

using Setter = std::function<void(PipelineConfig&, const std::string&)>;

double to_double(const std::string& v) {
  std::size_t pos = 0;
  const double d = std::stod(v, &pos);
  if (pos != v.size()) throw std::runtime_error("not a number: '" + v + "'");
  return d;
}

int to_int(const std::string& v) {
  std::size_t pos = 0;
  const int i = std::stoi(v, &pos);
  if (pos != v.size()) throw std::runtime_error("not an integer: '" + v + "'");
  return i;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error("not a boolean: '" + v + "'");
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    // camera
    t["camera.fx"] = [](PipelineConfig& c, const std::string& v) { c.camera.fx = to_double(v); };
    t["camera.fy"] = [](PipelineConfig& c, const std::string& v) { c.camera.fy = to_double(v); };
    t["camera.cx"] = [](PipelineConfig& c, const std::string& v) { c.camera.cx = to_double(v); };
    t["camera.cy"] = [](PipelineConfig& c, const std::string& v) { c.camera.cy = to_double(v); };
    t["camera.width"] = [](PipelineConfig& c, const std::string& v) { c.camera.width = to_int(v); };
    t["camera.height"] = [](PipelineConfig& c, const std::string& v) { c.camera.height = to_int(v); };
    t["camera.depth_scale"] = [](PipelineConfig& c, const std::string& v) {
      c.camera.depth_scale = to_double(v);
    };
    // depth range
    t["depth.min"] = [](PipelineConfig& c, const std::string& v) { c.depth.min_m = to_double(v); };
    t["depth.max"] = [](PipelineConfig& c, const std::string& v) { c.depth.max_m = to_double(v); };
    // dataset
    t["dataset.path"] = [](PipelineConfig& c, const std::string& v) { c.dataset.path = v; };
    t["dataset.detections_dir"] = [](PipelineConfig& c, const std::string& v) {
      c.dataset.detections_dir = v;
    };
    t["dataset.category_table"] = [](PipelineConfig& c, const std::string& v) {
      c.dataset.category_table = v;
    };
    t["dataset.max_assoc_gap"] = [](PipelineConfig& c, const std::string& v) {
      c.dataset.max_assoc_gap = to_double(v);
    };
    t["dataset.score_min"] = [](PipelineConfig& c, const std::string& v) {
      c.dataset.score_min = to_double(v);
    };
    // segmentation
    t["segmentation.theta_dist"] = [](PipelineConfig& c, const std::string& v) {
      c.segmentation.theta_dist = to_double(v);
    };
    t["segmentation.theta_angle_deg"] = [](PipelineConfig& c, const std::string& v) {
      c.segmentation.theta_angle_deg = to_double(v);
    };
    t["segmentation.min_segment_area"] = [](PipelineConfig& c, const std::string& v) {
      c.segmentation.min_segment_area = to_int(v);
    };
    // instance
    t["instance.metric"] = [](PipelineConfig& c, const std::string& v) {
      if (v == "intersection_over_segment" || v == "ios") {
        c.instance.metric = OverlapMetric::kIntersectionOverSegment;
      } else if (v == "iou") {
        c.instance.metric = OverlapMetric::kIou;
      } else {
        throw std::runtime_error("instance.metric must be intersection_over_segment or iou");
      }
    };
    t["instance.overlap_threshold"] = [](PipelineConfig& c, const std::string& v) {
      c.instance.overlap_threshold = to_double(v);
    };
    t["instance.allow_empty_instances"] = [](PipelineConfig& c, const std::string& v) {
      c.instance.allow_empty_instances = to_bool(v);
    };
    // tracking
    t["tracking.rgb_weight"] = [](PipelineConfig& c, const std::string& v) {
      c.tracking.rgb_weight = to_double(v);
    };
    t["tracking.dist_thresh"] = [](PipelineConfig& c, const std::string& v) {
      c.tracking.dist_thresh = to_double(v);
    };
    t["tracking.angle_thresh_deg"] = [](PipelineConfig& c, const std::string& v) {
      c.tracking.angle_thresh_deg = to_double(v);
    };
    t["tracking.iterations"] = [](PipelineConfig& c, const std::string& v) {
      std::istringstream ss(v);
      std::string tok;
      std::array<int, 3> iters{};
      int n = 0;
      while (std::getline(ss, tok, ',')) {
        if (n >= 3) throw std::runtime_error("tracking.iterations takes 3 comma-separated counts");
        iters[n++] = to_int(tok);
      }
      if (n != 3) throw std::runtime_error("tracking.iterations takes 3 comma-separated counts");
      // config lists coarse->fine; storage is indexed by level (0 = finest)
      c.tracking.iterations = {iters[2], iters[1], iters[0]};
    };
    t["tracking.twist_eps"] = [](PipelineConfig& c, const std::string& v) {
      c.tracking.twist_eps = to_double(v);
    };
    t["tracking.min_inliers"] = [](PipelineConfig& c, const std::string& v) {
      c.tracking.min_inliers = to_int(v);
    };
    t["tracking.min_visible_pixels"] = [](PipelineConfig& c, const std::string& v) {
      c.tracking.min_visible_pixels = to_int(v);
    };
    t["tracking.max_step_halvings"] = [](PipelineConfig& c, const std::string& v) {
      c.tracking.max_step_halvings = to_int(v);
    };
    t["tracking.residual_cap"] = [](PipelineConfig& c, const std::string& v) {
      c.tracking.residual_cap = to_double(v);
    };
    // motion
    t["motion.enabled"] = [](PipelineConfig& c, const std::string& v) {
      c.motion_enabled = to_bool(v);
    };
    t["motion.min_dynamic_centroid"] = [](PipelineConfig& c, const std::string& v) {
      c.motion.min_dynamic_centroid = to_double(v);
    };
    t["motion.overlap_threshold"] = [](PipelineConfig& c, const std::string& v) {
      c.motion.overlap_threshold = to_double(v);
    };
    t["motion.kmeans_max_iters"] = [](PipelineConfig& c, const std::string& v) {
      c.motion.kmeans_max_iters = to_int(v);
    };
    t["motion.max_samples"] = [](PipelineConfig& c, const std::string& v) {
      c.motion.max_samples = to_int(v);
    };
    // mapping
    t["mapping.assoc_dist"] = [](PipelineConfig& c, const std::string& v) {
      c.mapping.assoc_dist = to_double(v);
    };
    t["mapping.assoc_angle_deg"] = [](PipelineConfig& c, const std::string& v) {
      c.mapping.assoc_angle_deg = to_double(v);
    };
    t["mapping.w_new"] = [](PipelineConfig& c, const std::string& v) {
      c.mapping.w_new = to_double(v);
    };
    t["mapping.cull_weight"] = [](PipelineConfig& c, const std::string& v) {
      c.mapping.cull_weight = to_double(v);
    };
    t["mapping.stability_frames"] = [](PipelineConfig& c, const std::string& v) {
      c.mapping.stability_frames = to_int(v);
    };
    t["mapping.min_object_pixels"] = [](PipelineConfig& c, const std::string& v) {
      c.mapping.min_object_pixels = to_int(v);
    };
    t["mapping.inactive_timeout"] = [](PipelineConfig& c, const std::string& v) {
      c.mapping.inactive_timeout = to_int(v);
    };
    t["mapping.occlusion_tol"] = [](PipelineConfig& c, const std::string& v) {
      c.mapping.occlusion_tol = to_double(v);
    };
    t["mapping.match_threshold"] = [](PipelineConfig& c, const std::string& v) {
      c.mapping.match_threshold = to_double(v);
    };
    t["mapping.fuse_edge_pixels"] = [](PipelineConfig& c, const std::string& v) {
      c.mapping.fuse_edge_pixels = to_bool(v);
    };
    // pipeline
    t["pipeline.output_dir"] = [](PipelineConfig& c, const std::string& v) {
      c.pipeline.output_dir = v;
    };
    t["pipeline.instrumentation"] = [](PipelineConfig& c, const std::string& v) {
      c.pipeline.instrumentation = to_bool(v);
    };
    t["pipeline.detections_enabled"] = [](PipelineConfig& c, const std::string& v) {
      c.pipeline.detections_enabled = to_bool(v);
    };
    t["pipeline.dump_masks"] = [](PipelineConfig& c, const std::string& v) {
      c.pipeline.dump_masks = to_bool(v);
    };
    t["pipeline.dump_residuals"] = [](PipelineConfig& c, const std::string& v) {
      c.pipeline.dump_residuals = to_bool(v);
    };
    return t;
  }();
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

void set_key(PipelineConfig& config, const std::string& key, const std::string& value,
             const std::string& where) {
  const auto it = setters().find(key);
  if (it == setters().end()) {
    throw std::runtime_error(where + ": unknown configuration key '" + key + "'");
  }
  try {
    it->second(config, value);
  } catch (const std::exception& e) {
    throw std::runtime_error(where + ": bad value for '" + key + "': " + e.what());
  }
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  PipelineConfig config;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw std::runtime_error(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    set_key(config, section.empty() ? key : section + "." + key, value, where);
  }
  validate_config(config);
  return config;
}

void apply_override(PipelineConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw std::runtime_error("override must look like section.key=value: " + assignment);
  }
  set_key(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), "override");
}

void validate_config(const PipelineConfig& config) {
  if (!config.camera.valid()) throw std::runtime_error("config: invalid camera intrinsics");
  if (config.depth.min_m <= 0 || config.depth.max_m <= config.depth.min_m) {
    throw std::runtime_error("config: depth range must satisfy 0 < min < max");
  }
  if (config.dataset.score_min < 0 || config.dataset.score_min > 1) {
    throw std::runtime_error("config: dataset.score_min must be in [0,1]");
  }
  if (config.instance.overlap_threshold < 0 || config.motion.overlap_threshold < 0) {
    throw std::runtime_error("config: overlap thresholds must be nonnegative");
  }
  for (int it : config.tracking.iterations) {
    if (it < 1) throw std::runtime_error("config: tracking.iterations must be positive");
  }
  if (config.tracking.residual_cap <= 0) {
    throw std::runtime_error("config: tracking.residual_cap must be positive");
  }
}

}  // namespace dynsurf
