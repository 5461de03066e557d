#include "dynsurf/synthetic.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "dynsurf/ply.hpp"
#include "dynsurf/png_io.hpp"

namespace dynsurf {

namespace fs = std::filesystem;

Pose SceneEntity::pose_at(double t) const {
  Pose p = base_pose;
  const double active = std::min(t, motion_stop) - motion_start;
  if (active > 0) p.t += velocity * active;
  return p;
}

Pose look_at_pose(const Eigen::Vector3d& position, const Eigen::Vector3d& target) {
  // Camera convention: +x right, +y down, +z forward.
  const Eigen::Vector3d z = (target - position).normalized();
  Eigen::Vector3d x = Eigen::Vector3d(0, 1, 0).cross(z);
  if (x.norm() < 1e-9) x = Eigen::Vector3d(1, 0, 0);
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Pose p;
  p.R.col(0) = x;
  p.R.col(1) = y;
  p.R.col(2) = z;
  p.t = position;
  return p;
}

Pose CameraPath::pose_at(double t) const {
  if (kind == Kind::kStatic) return look_at_pose(start, target);
  const double w = 2.0 * M_PI / period;
  Eigen::Vector3d p = start;
  p.x() += amp_x * std::sin(w * t);
  p.y() += amp_y * std::sin(2.0 * w * t);
  p.z() += amp_z * (1.0 - std::cos(w * t));
  return look_at_pose(p, target);
}

namespace {

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  Eigen::Vector3d normal_local = Eigen::Vector3d::UnitZ();
  double tex_u = 0, tex_v = 0;
  bool ok = false;
};

constexpr double kRayMin = 0.05;

Hit intersect_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Eigen::Vector3d& h) {
  Hit hit;
  double t0 = kRayMin, t1 = std::numeric_limits<double>::infinity();
  int enter_axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      if (std::abs(o[a]) > h[a]) return hit;
      continue;
    }
    double ta = (-h[a] - o[a]) / d[a];
    double tb = (h[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    if (ta > t0) {
      t0 = ta;
      enter_axis = a;
    }
    t1 = std::min(t1, tb);
    if (t0 > t1) return hit;
  }
  if (enter_axis < 0) return hit;  // origin inside the box (or ray grazing)
  hit.t = t0;
  const Eigen::Vector3d p = o + t0 * d;
  hit.normal_local.setZero();
  hit.normal_local[enter_axis] = d[enter_axis] > 0 ? -1.0 : 1.0;
  const int ua = (enter_axis + 1) % 3, va = (enter_axis + 2) % 3;
  hit.tex_u = p[ua];
  hit.tex_v = p[va];
  hit.ok = true;
  return hit;
}

Hit intersect_rect(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Eigen::Vector3d& h) {
  Hit hit;
  if (std::abs(d.z()) < 1e-12) return hit;
  const double t = -o.z() / d.z();
  if (t < kRayMin) return hit;
  const Eigen::Vector3d p = o + t * d;
  if (std::abs(p.x()) > h.x() || std::abs(p.y()) > h.y()) return hit;
  hit.t = t;
  hit.normal_local = Eigen::Vector3d(0, 0, d.z() > 0 ? -1.0 : 1.0);
  hit.tex_u = p.x();
  hit.tex_v = p.y();
  hit.ok = true;
  return hit;
}

Rgb8 shade(const ProceduralTexture& tex, double u, double v) {
  const double s =
      (1.0 - tex.amp) + tex.amp * 0.5 * (1.0 + std::sin(tex.freq_u * u) * std::sin(tex.freq_v * v));
  const auto ch = [s](std::uint8_t c) { return std::uint8_t(std::min(255.0, c * s)); };
  return {ch(tex.base.r), ch(tex.base.g), ch(tex.base.b)};
}

struct EntityAtTime {
  const SceneEntity* entity;
  Pose world_to_entity;
  Pose entity_to_world;
};

void render_row(const SyntheticScene& scene, const std::vector<EntityAtTime>& ents,
                const Pose& cam, int y, RenderedFrame& out) {
  const Intrinsics& K = scene.K;
  for (int x = 0; x < K.width; ++x) {
    const Eigen::Vector3d dir_c((x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0);
    const Eigen::Vector3d d_w = cam.R * dir_c;  // unnormalized: ray parameter equals depth
    double best_t = std::numeric_limits<double>::infinity();
    const EntityAtTime* best = nullptr;
    Hit best_hit;
    for (const auto& e : ents) {
      const Eigen::Vector3d o_e = e.world_to_entity * cam.t;
      const Eigen::Vector3d d_e = e.world_to_entity.R * d_w;
      const Hit h = e.entity->kind == SceneEntity::Kind::kBox
                        ? intersect_box(o_e, d_e, e.entity->half_extent)
                        : intersect_rect(o_e, d_e, e.entity->half_extent);
      if (h.ok && h.t < best_t) {
        best_t = h.t;
        best = &e;
        best_hit = h;
      }
    }
    if (!best) {
      out.depth(x, y) = 0.0f;
      out.rgb(x, y) = {0, 0, 0};
      out.entity_mask(x, y) = -1;
      continue;
    }
    out.depth(x, y) = float(best_t);
    out.rgb(x, y) = shade(best->entity->texture, best_hit.tex_u, best_hit.tex_v);
    out.entity_mask(x, y) = best->entity->id;
  }
}

RenderedFrame render_impl(const SyntheticScene& scene, int frame, bool parallel) {
  const double t = scene.timestamp(frame);
  const Pose cam = scene.camera.pose_at(t);
  std::vector<EntityAtTime> ents;
  for (const auto& e : scene.entities) {
    const Pose ew = e.pose_at(t);
    ents.push_back({&e, ew.inverse(), ew});
  }
  // Degenerate-scene guard: the camera must not sit inside a box.
  for (const auto& e : ents) {
    if (e.entity->kind != SceneEntity::Kind::kBox) continue;
    const Eigen::Vector3d o = e.world_to_entity * cam.t;
    if ((o.cwiseAbs().array() <= e.entity->half_extent.array()).all()) {
      throw std::runtime_error("synthetic camera is inside scene geometry at frame " +
                               std::to_string(frame));
    }
  }

  RenderedFrame out;
  out.timestamp = t;
  out.depth = GrayF(scene.K.width, scene.K.height);
  out.rgb = ColorImage(scene.K.width, scene.K.height);
  out.entity_mask = LabelImage(scene.K.width, scene.K.height);
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < scene.K.height; ++y) render_row(scene, ents, cam, y, out);
  } else {
    for (int y = 0; y < scene.K.height; ++y) render_row(scene, ents, cam, y, out);
  }

  if (scene.depth_noise_sigma0 > 0) {
    // Serial pass so the noise stream is independent of thread count.
    std::mt19937_64 rng(scene.seed * 1000003ull + std::uint64_t(frame));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < out.depth.size(); ++i) {
      if (out.depth[i] <= 0) continue;
      const double sigma = scene.depth_noise_sigma0 * double(out.depth[i]) * double(out.depth[i]);
      out.depth[i] = float(std::max(0.0, out.depth[i] + sigma * gauss(rng)));
    }
  }
  return out;
}

}  // namespace

RenderedFrame render_scene_frame(const SyntheticScene& scene, int frame) {
  return render_impl(scene, frame, true);
}

namespace serial {
RenderedFrame render_scene_frame(const SyntheticScene& scene, int frame) {
  return render_impl(scene, frame, false);
}
}  // namespace serial

Frame rendered_to_frame(const RenderedFrame& rendered, const Intrinsics& K,
                        const DepthRange& range) {
  return build_frame(rendered.timestamp, rendered.rgb, rendered.depth, K, range);
}

std::vector<Detection> detections_from_mask(const RenderedFrame& rendered,
                                            const SyntheticScene& scene,
                                            const CategoryTable& categories, int min_pixels) {
  std::vector<Detection> out;
  for (const auto& e : scene.entities) {
    if (!e.emit_detection) continue;
    int x0 = rendered.entity_mask.width(), y0 = rendered.entity_mask.height(), x1 = -1, y1 = -1;
    int count = 0;
    for (int y = 0; y < rendered.entity_mask.height(); ++y) {
      for (int x = 0; x < rendered.entity_mask.width(); ++x) {
        if (rendered.entity_mask(x, y) != e.id) continue;
        ++count;
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
    }
    if (count < min_pixels) continue;
    Detection d;
    d.class_id = e.id;
    d.class_name = e.class_name.empty() ? "object" : e.class_name;
    d.score = 0.99;
    d.x = x0;
    d.y = y0;
    d.w = x1 - x0 + 1;
    d.h = y1 - y0 + 1;
    d.rigid = categories.rigid(d.class_name);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Eigen::Vector3f> sample_entity_surface(const SceneEntity& entity, double spacing,
                                                   double t) {
  std::vector<Eigen::Vector3f> points;
  const Pose pose = entity.pose_at(t);
  const Eigen::Vector3d h = entity.half_extent;
  const auto emit = [&](double x, double y, double z) {
    points.push_back((pose * Eigen::Vector3d(x, y, z)).cast<float>());
  };
  const auto grid = [&](int fixed_axis, double sign) {
    const int ua = (fixed_axis + 1) % 3, va = (fixed_axis + 2) % 3;
    const int nu = std::max(1, int(2 * h[ua] / spacing));
    const int nv = std::max(1, int(2 * h[va] / spacing));
    for (int i = 0; i <= nu; ++i) {
      for (int j = 0; j <= nv; ++j) {
        Eigen::Vector3d p;
        p[fixed_axis] = sign * h[fixed_axis];
        p[ua] = -h[ua] + 2 * h[ua] * i / nu;
        p[va] = -h[va] + 2 * h[va] * j / nv;
        emit(p.x(), p.y(), p.z());
      }
    }
  };
  if (entity.kind == SceneEntity::Kind::kRect) {
    const int nu = std::max(1, int(2 * h.x() / spacing));
    const int nv = std::max(1, int(2 * h.y() / spacing));
    for (int i = 0; i <= nu; ++i) {
      for (int j = 0; j <= nv; ++j) {
        emit(-h.x() + 2 * h.x() * i / nu, -h.y() + 2 * h.y() * j / nv, 0.0);
      }
    }
  } else {
    for (int a = 0; a < 3; ++a) {
      grid(a, 1.0);
      grid(a, -1.0);
    }
  }
  return points;
}

namespace {
std::string stamp(double ts) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", ts);
  return buf;
}
}  // namespace

void write_synthetic_dataset(const SyntheticScene& scene, const std::string& out_dir,
                             bool with_detections, bool with_masks) {
  const fs::path dir(out_dir);
  fs::create_directories(dir / "rgb");
  fs::create_directories(dir / "depth");
  if (with_detections) fs::create_directories(dir / "dets");
  if (with_masks) fs::create_directories(dir / "masks");

  std::ofstream rgb_list(dir / "rgb.txt");
  std::ofstream depth_list(dir / "depth.txt");
  std::ofstream gt(dir / "groundtruth.txt");
  rgb_list << "# timestamp filename\n";
  depth_list << "# timestamp filename\n";
  gt << "# timestamp tx ty tz qx qy qz qw\n";

  const CategoryTable categories = CategoryTable::default_table();
  std::vector<TrajectoryRecord> cam_records;
  for (int f = 0; f < scene.frame_count; ++f) {
    const RenderedFrame r = render_scene_frame(scene, f);
    const std::string name = stamp(r.timestamp);
    write_rgb8((dir / "rgb" / (name + ".png")).string(), r.rgb);
    write_depth16((dir / "depth" / (name + ".png")).string(), r.depth, scene.K.depth_scale);
    rgb_list << name << " rgb/" << name << ".png\n";
    depth_list << name << " depth/" << name << ".png\n";
    cam_records.push_back(
        TrajectoryRecord::from_pose(r.timestamp, scene.camera.pose_at(r.timestamp)));
    const auto& rec = cam_records.back();
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f\n", rec.timestamp,
                  rec.translation.x(), rec.translation.y(), rec.translation.z(), rec.rotation.x(),
                  rec.rotation.y(), rec.rotation.z(), rec.rotation.w());
    gt << buf;
    if (with_detections) {
      std::ofstream det(dir / "dets" / (name + ".det"));
      det << "# class_id class_name score x y w h\n";
      for (const auto& d : detections_from_mask(r, scene, categories)) {
        det << d.class_id << " " << d.class_name << " " << d.score << " " << d.x << " " << d.y
            << " " << d.w << " " << d.h << "\n";
      }
    }
    if (with_masks) {
      LabelImage shifted(r.entity_mask.width(), r.entity_mask.height());
      for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] = r.entity_mask[i] + 1;
      write_label16((dir / "masks" / (name + ".png")).string(), shifted);
    }
  }

  std::ofstream intr(dir / "intrinsics.txt");
  intr << scene.K.fx << " " << scene.K.fy << " " << scene.K.cx << " " << scene.K.cy << " "
       << scene.K.width << " " << scene.K.height << " " << scene.K.depth_scale << "\n";

  for (const auto& e : scene.entities) {
    if (!e.emit_detection && e.velocity.norm() == 0.0) continue;
    const auto points = sample_entity_surface(e, 0.005, 0.0);
    save_point_cloud_ply((dir / ("model_" + std::to_string(e.id) + ".ply")).string(), points);
  }
}

SyntheticScene make_static_scene(const Intrinsics& K, int frames) {
  SyntheticScene scene;
  scene.K = K;
  scene.frame_count = frames;

  SceneEntity wall;
  wall.kind = SceneEntity::Kind::kRect;
  wall.id = 0;
  wall.half_extent = {2.4, 1.8, 0.0};
  wall.base_pose = look_at_pose({0, 0, 2.8}, {0, 0, 0});  // faces the origin
  wall.texture = {{210, 190, 160}, 9.0, 7.0, 0.5};
  scene.entities.push_back(wall);

  SceneEntity side;
  side.kind = SceneEntity::Kind::kRect;
  side.id = 1;
  side.half_extent = {1.4, 1.6, 0.0};
  side.base_pose = look_at_pose({1.6, 0, 1.6}, {0.2, 0, 1.4});
  side.texture = {{150, 200, 180}, 13.0, 11.0, 0.5};
  scene.entities.push_back(side);

  SceneEntity box1;
  box1.id = 2;
  box1.half_extent = {0.25, 0.2, 0.15};
  box1.base_pose = look_at_pose({-0.45, 0.25, 2.1}, {-0.9, 0.2, 0.0});
  box1.texture = {{220, 120, 110}, 31.0, 27.0, 0.5};
  scene.entities.push_back(box1);

  SceneEntity box2;
  box2.id = 3;
  box2.half_extent = {0.18, 0.25, 0.12};
  box2.base_pose = look_at_pose({0.5, -0.3, 1.9}, {1.2, -0.1, 0.2});
  box2.texture = {{120, 140, 220}, 25.0, 35.0, 0.5};
  scene.entities.push_back(box2);

  SceneEntity box3;
  box3.id = 4;
  box3.half_extent = {0.3, 0.12, 0.18};
  box3.base_pose = look_at_pose({-0.15, -0.45, 2.35}, {0.4, -1.2, 0.5});
  box3.texture = {{170, 220, 130}, 21.0, 19.0, 0.5};
  scene.entities.push_back(box3);

  scene.camera.kind = CameraPath::Kind::kArc;
  scene.camera.start = {0, 0, 0};
  scene.camera.target = {0, 0, 2.2};
  scene.camera.amp_x = 0.12;
  scene.camera.amp_y = 0.05;
  scene.camera.amp_z = 0.04;
  scene.camera.period = std::max(2.0, frames / scene.fps);
  return scene;
}

SyntheticScene make_two_body_scene(const Intrinsics& K, int frames) {
  SyntheticScene scene = make_static_scene(K, frames);

  // Textured panel slightly yawed toward the camera. It rests for the first
  // third of the sequence, then moves dominantly along its face normal
  // (toward the camera) at ~6 cm/frame: the per-frame point-to-plane
  // mismatch on the whole face then sits between the static guard and the
  // residual saturation cap, so the dynamic cluster captures the face
  // immediately.
  SceneEntity panel;
  panel.kind = SceneEntity::Kind::kBox;
  panel.id = 10;
  panel.half_extent = {0.14, 0.11, 0.02};
  panel.base_pose = look_at_pose({-0.15, 0.0, 1.6}, {0.45, 0.08, -3.0});
  panel.texture = {{235, 210, 90}, 55.0, 48.0, 0.55};
  panel.class_name = "box";
  panel.emit_detection = true;
  panel.motion_start = (frames / 3) / scene.fps;
  panel.motion_stop = panel.motion_start + 20.0 / scene.fps;
  panel.velocity = Eigen::Vector3d(-0.012, 0.006, -0.062) * scene.fps;
  scene.entities.push_back(panel);

  scene.camera.amp_x = 0.08;
  scene.camera.amp_y = 0.04;
  scene.camera.amp_z = 0.03;
  return scene;
}

}  // namespace dynsurf
