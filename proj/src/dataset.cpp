#include "dynsurf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dynsurf/png_io.hpp"

namespace dynsurf {

namespace fs = std::filesystem;

namespace {

struct StampedPath {
  double timestamp;
  std::string path;
};

std::vector<StampedPath> read_listing(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open listing: " + file);
  std::vector<StampedPath> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ss(line);
    double ts;
    std::string path;
    if (!(ss >> ts >> path)) {
      // blank or comment-only line
      std::istringstream probe(line);
      std::string tok;
      if (probe >> tok) {
        throw std::runtime_error(file + ":" + std::to_string(line_no) + ": malformed listing line");
      }
      continue;
    }
    if (!out.empty() && ts <= out.back().timestamp) {
      throw std::runtime_error(file + ":" + std::to_string(line_no) +
                               ": timestamps not strictly increasing");
    }
    out.push_back({ts, path});
  }
  return out;
}

std::string format_timestamp(double ts) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", ts);
  return buf;
}

}  // namespace

std::vector<std::pair<int, int>> associate_timestamps(const std::vector<double>& a,
                                                      const std::vector<double>& b,
                                                      double max_gap) {
  struct Cand {
    double gap;
    int ia, ib;
  };
  std::vector<Cand> cands;
  // Candidate pairs within the gap; both lists are sorted so a sliding
  // window keeps this near-linear.
  std::size_t lo = 0;
  for (int ia = 0; ia < int(a.size()); ++ia) {
    while (lo < b.size() && b[lo] < a[ia] - max_gap) ++lo;
    for (std::size_t ib = lo; ib < b.size() && b[ib] <= a[ia] + max_gap; ++ib) {
      cands.push_back({std::abs(a[ia] - b[ib]), ia, int(ib)});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.gap != y.gap) return x.gap < y.gap;
    if (x.ia != y.ia) return x.ia < y.ia;
    return x.ib < y.ib;
  });
  std::vector<char> used_a(a.size(), 0), used_b(b.size(), 0);
  std::vector<std::pair<int, int>> pairs;
  for (const Cand& c : cands) {
    if (used_a[c.ia] || used_b[c.ib]) continue;
    used_a[c.ia] = used_b[c.ib] = 1;
    pairs.push_back({c.ia, c.ib});
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

SequenceIndex load_tum_sequence(const std::string& dir_path, double max_assoc_gap,
                                const std::string& detections_dir) {
  const fs::path dir(dir_path);
  if (!fs::exists(dir)) throw std::runtime_error("dataset directory not found: " + dir_path);
  const auto rgb = read_listing((dir / "rgb.txt").string());
  const auto depth = read_listing((dir / "depth.txt").string());

  std::vector<double> rgb_ts, depth_ts;
  for (auto& e : rgb) rgb_ts.push_back(e.timestamp);
  for (auto& e : depth) depth_ts.push_back(e.timestamp);
  const auto pairs = associate_timestamps(rgb_ts, depth_ts, max_assoc_gap);
  if (pairs.empty()) throw std::runtime_error("no associable rgb/depth pairs in " + dir_path);

  SequenceIndex index;
  for (auto [ia, ib] : pairs) {
    SequenceEntry e;
    e.timestamp = rgb[ia].timestamp;
    e.rgb_path = (dir / rgb[ia].path).string();
    e.depth_path = (dir / depth[ib].path).string();
    if (!detections_dir.empty()) {
      const fs::path det = fs::path(detections_dir) / (format_timestamp(e.timestamp) + ".det");
      if (fs::exists(det)) e.detections_path = det.string();
    }
    index.entries.push_back(std::move(e));
  }

  // Optional sidecar intrinsics: "fx fy cx cy width height depth_scale".
  const fs::path intr = dir / "intrinsics.txt";
  if (fs::exists(intr)) {
    std::ifstream in(intr);
    Intrinsics K;
    if (in >> K.fx >> K.fy >> K.cx >> K.cy >> K.width >> K.height >> K.depth_scale) {
      index.intrinsics = K;
    } else {
      throw std::runtime_error("malformed intrinsics file: " + intr.string());
    }
  }
  const fs::path gt = dir / "groundtruth.txt";
  if (fs::exists(gt)) index.groundtruth_path = gt.string();
  return index;
}

CategoryTable CategoryTable::default_table() {
  CategoryTable t;
  t.table_["person"] = false;
  return t;
}

CategoryTable CategoryTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open category table: " + path);
  CategoryTable t;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ss(line);
    std::string name, kind;
    if (!(ss >> name)) continue;
    if (!(ss >> kind) || (kind != "rigid" && kind != "nonrigid")) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected '<class> rigid|nonrigid'");
    }
    t.table_[name] = kind == "rigid";
  }
  return t;
}

bool CategoryTable::rigid(const std::string& class_name) const {
  const auto it = table_.find(class_name);
  return it == table_.end() ? true : it->second;
}

std::vector<Detection> load_detections(const std::string& path, const CategoryTable& categories,
                                       const DetectionParams& params) {
  std::vector<Detection> out;
  if (path.empty() || !fs::exists(path)) return out;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open detections: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ss(line);
    Detection d;
    if (!(ss >> d.class_id)) {
      std::istringstream probe(line);
      std::string tok;
      if (probe >> tok) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed detection line");
      }
      continue;
    }
    if (!(ss >> d.class_name >> d.score >> d.x >> d.y >> d.w >> d.h)) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed detection line");
    }
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": score outside [0,1]");
    }
    if (d.score < params.score_min) continue;
    // Clamp to image bounds; degenerate boxes are dropped.
    const double x1 = std::min(double(params.image_width), std::max(0.0, d.x + d.w));
    const double y1 = std::min(double(params.image_height), std::max(0.0, d.y + d.h));
    d.x = std::min(double(params.image_width), std::max(0.0, d.x));
    d.y = std::min(double(params.image_height), std::max(0.0, d.y));
    d.w = x1 - d.x;
    d.h = y1 - d.y;
    if (d.w <= 0 || d.h <= 0) continue;
    if (!categories.known(d.class_name)) {
      std::cerr << "warning: unknown class '" << d.class_name << "' treated as rigid\n";
    }
    d.rigid = categories.rigid(d.class_name);
    out.push_back(std::move(d));
  }
  return out;
}

Frame load_frame(const SequenceEntry& entry, const Intrinsics& K, const DepthRange& range) {
  ColorImage rgb = read_rgb8(entry.rgb_path);
  GrayF depth = read_depth16(entry.depth_path, K.depth_scale);
  if (rgb.width() != depth.width() || rgb.height() != depth.height()) {
    throw std::runtime_error("rgb/depth size mismatch at t=" + format_timestamp(entry.timestamp));
  }
  return build_frame(entry.timestamp, std::move(rgb), std::move(depth), K, range);
}

TrajectoryRecord TrajectoryRecord::from_pose(double t, const Pose& p) {
  TrajectoryRecord r;
  r.timestamp = t;
  r.translation = p.t;
  r.rotation = Eigen::Quaterniond(p.R).normalized();
  return r;
}

Pose TrajectoryRecord::pose() const {
  Pose p;
  p.R = rotation.normalized().toRotationMatrix();
  p.t = translation;
  return p;
}

void save_trajectory(const std::string& path, const std::vector<TrajectoryRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory: " + path);
  out << "# timestamp tx ty tz qx qy qz qw\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f\n", r.timestamp,
                  r.translation.x(), r.translation.y(), r.translation.z(), r.rotation.x(),
                  r.rotation.y(), r.rotation.z(), r.rotation.w());
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<TrajectoryRecord> load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory: " + path);
  std::vector<TrajectoryRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ss(line);
    TrajectoryRecord r;
    double qx, qy, qz, qw;
    if (!(ss >> r.timestamp >> r.translation.x() >> r.translation.y() >> r.translation.z() >> qx >>
          qy >> qz >> qw)) {
      std::istringstream probe(line);
      std::string tok;
      if (probe >> tok) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed trajectory line");
      }
      continue;
    }
    r.rotation = Eigen::Quaterniond(qw, qx, qy, qz);
    if (std::abs(r.rotation.norm() - 1.0) > 1e-3) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": quaternion is not unit");
    }
    r.rotation.normalize();
    out.push_back(r);
  }
  return out;
}

}  // namespace dynsurf
