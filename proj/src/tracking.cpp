#include "dynsurf/tracking.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

namespace dynsurf {

namespace {

int scaled_threshold(int base_at_vga, int w, int h, int floor_value) {
  const double scale = double(w) * double(h) / (640.0 * 480.0);
  return std::max(floor_value, int(std::llround(base_at_vga * scale)));
}

PyramidLevel downsample(const PyramidLevel& src) {
  PyramidLevel dst;
  dst.K = src.K.level(1);
  const int w = dst.K.width, h = dst.K.height;
  dst.intensity = GrayF(w, h, 0.0f);
  dst.depth = GrayF(w, h, 0.0f);
  dst.vertex = Image<Eigen::Vector3f>(w, h, Eigen::Vector3f::Zero());
  dst.normal = Image<Eigen::Vector3f>(w, h, Eigen::Vector3f::Zero());
  dst.valid = Mask(w, h, 0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float depths[4];
      int n_valid = 0;
      float isum_valid = 0.0f, isum_all = 0.0f;
      int n_all = 0;
      Eigen::Vector3f nsum = Eigen::Vector3f::Zero();
      for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
          const int sx = 2 * x + i, sy = 2 * y + j;
          if (sx >= src.width() || sy >= src.height()) continue;
          isum_all += src.intensity(sx, sy);
          ++n_all;
          if (!src.valid(sx, sy)) continue;
          depths[n_valid++] = src.depth(sx, sy);
          isum_valid += src.intensity(sx, sy);
          nsum += src.normal(sx, sy);
        }
      }
      dst.intensity(x, y) = n_valid > 0 ? isum_valid / n_valid : (n_all > 0 ? isum_all / n_all : 0.0f);
      if (n_valid == 0) continue;
      std::sort(depths, depths + n_valid);
      const float d = depths[(n_valid - 1) / 2];  // lower median of valid depths
      const float len = nsum.norm();
      if (len < 1e-12f || d <= 0.0f) continue;
      dst.depth(x, y) = d;
      dst.vertex(x, y) = backproject(x, y, d, dst.K).cast<float>();
      dst.normal(x, y) = nsum / len;
      dst.valid(x, y) = 1;
    }
  }
  return dst;
}

std::vector<PyramidLevel> extend_pyramid(PyramidLevel level0, int levels) {
  std::vector<PyramidLevel> pyr;
  pyr.push_back(std::move(level0));
  for (int l = 1; l < levels; ++l) pyr.push_back(downsample(pyr.back()));
  return pyr;
}

Mask downsample_mask(const Mask& src) {
  Mask dst(src.width() / 2, src.height() / 2, 0);
  for (int y = 0; y < dst.height(); ++y) {
    for (int x = 0; x < dst.width(); ++x) {
      // conservative: masked if any source pixel is masked
      std::uint8_t m = 0;
      for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
          const int sx = 2 * x + i, sy = 2 * y + j;
          if (sx < src.width() && sy < src.height()) m |= src(sx, sy);
        }
      }
      dst(x, y) = m;
    }
  }
  return dst;
}

struct Sample {
  double value = 0, du = 0, dv = 0;
  bool ok = false;
};

Sample sample_bilinear(const GrayF& img, const Mask& valid, double u, double v) {
  Sample s;
  const int x0 = int(std::floor(u)), y0 = int(std::floor(v));
  if (x0 < 0 || y0 < 0 || x0 + 1 >= img.width() || y0 + 1 >= img.height()) return s;
  if (!valid(x0, y0) || !valid(x0 + 1, y0) || !valid(x0, y0 + 1) || !valid(x0 + 1, y0 + 1)) return s;
  const double a = u - x0, b = v - y0;
  const double i00 = img(x0, y0), i10 = img(x0 + 1, y0);
  const double i01 = img(x0, y0 + 1), i11 = img(x0 + 1, y0 + 1);
  s.value = (1 - a) * (1 - b) * i00 + a * (1 - b) * i10 + (1 - a) * b * i01 + a * b * i11;
  // exact derivative of the bilinear interpolant
  s.du = (1 - b) * (i10 - i00) + b * (i11 - i01);
  s.dv = (1 - a) * (i01 - i00) + a * (i11 - i10);
  s.ok = true;
  return s;
}

// Residual pair and Jacobians at a single correspondence. Twist layout is
// [v; omega], applied as a left increment: p' = exp(xi) * (T v_cur).
struct CorrTerms {
  double r_icp = 0;
  Vector6d J_icp = Vector6d::Zero();
  double r_rgb = 0;
  Vector6d J_rgb = Vector6d::Zero();
  bool has_rgb = false;
};

inline CorrTerms evaluate_correspondence(const TrackingProblem::Correspondence& c,
                                         const PyramidLevel& ref, const Eigen::Matrix3d& R,
                                         const Eigen::Vector3d& t) {
  CorrTerms out;
  const Eigen::Vector3d p = R * c.v_cur + t;
  out.r_icp = (c.v_ref - p).dot(c.n_ref);
  out.J_icp.head<3>() = -c.n_ref;
  out.J_icp.tail<3>() = -p.cross(c.n_ref);
  if (p.z() > 1e-9) {
    const double u = ref.K.fx * p.x() / p.z() + ref.K.cx;
    const double v = ref.K.fy * p.y() / p.z() + ref.K.cy;
    const Sample s = sample_bilinear(ref.intensity, ref.valid, u, v);
    if (s.ok) {
      out.r_rgb = s.value - c.i_cur;
      const double iz = 1.0 / p.z();
      Eigen::Vector3d a(s.du * ref.K.fx * iz, s.dv * ref.K.fy * iz,
                        -(s.du * ref.K.fx * p.x() + s.dv * ref.K.fy * p.y()) * iz * iz);
      out.J_rgb.head<3>() = a;
      out.J_rgb.tail<3>() = p.cross(a);
      out.has_rgb = true;
    }
  }
  return out;
}

}  // namespace

std::vector<PyramidLevel> build_frame_pyramid(const Frame& frame, int levels) {
  PyramidLevel l0;
  l0.K = frame.K;
  l0.intensity = frame.intensity;
  l0.depth = frame.depth;
  l0.vertex = frame.vertex;
  l0.normal = frame.normal;
  l0.valid = frame.valid;
  return extend_pyramid(std::move(l0), levels);
}

ReferenceFrame render_reference(const SurfelMap& map, const Pose& cam_to_map, const Intrinsics& K,
                                int levels) {
  ReferenceFrame ref;
  ref.map_id = map.map_id;
  ref.render_pose = cam_to_map;

  PyramidLevel l0;
  l0.K = K;
  l0.intensity = GrayF(K.width, K.height, 0.0f);
  l0.depth = GrayF(K.width, K.height, 0.0f);
  l0.vertex = Image<Eigen::Vector3f>(K.width, K.height, Eigen::Vector3f::Zero());
  l0.normal = Image<Eigen::Vector3f>(K.width, K.height, Eigen::Vector3f::Zero());
  l0.valid = Mask(K.width, K.height, 0);

  const LabelImage index = render_index_map(map, cam_to_map, K, /*active_only=*/false);
  const Pose map_to_cam = cam_to_map.inverse();
  const Eigen::Matrix3f R = map_to_cam.R.cast<float>();
  const Eigen::Vector3f t = map_to_cam.t.cast<float>();
  int valid_count = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const std::int32_t si = index[i];
    if (si < 0) continue;
    const Surfel& s = map.surfels[si];
    const Eigen::Vector3f p = R * s.position + t;
    Eigen::Vector3f n = R * s.normal;
    const float len = n.norm();
    if (len > 1e-12f) n /= len;
    l0.vertex[i] = p;
    l0.normal[i] = n;
    l0.depth[i] = p.z();
    l0.intensity[i] = intensity_of(s.color);
    l0.valid[i] = 1;
    ++valid_count;
  }
  ref.valid_count = valid_count;
  ref.pyramid = extend_pyramid(std::move(l0), levels);
  return ref;
}

ReferenceFrame reference_from_frame(const Frame& frame, int levels) {
  ReferenceFrame ref;
  ref.map_id = -1;
  ref.render_pose = Pose::identity();
  ref.pyramid = build_frame_pyramid(frame, levels);
  ref.valid_count = int(count_nonzero(frame.valid));
  return ref;
}

TrackingProblem::TrackingProblem(const PyramidLevel& ref, const PyramidLevel& cur,
                                 const Mask* invalid, const Pose& T, const TrackingParams& params)
    : ref_(ref), lambda_(params.rgb_weight) {
  const int w = cur.width(), h = cur.height();
  const double cos_angle = std::cos(params.angle_thresh_deg * M_PI / 180.0);
  const double dist2 = params.dist_thresh * params.dist_thresh;
  row_ranges_.assign(h, {0, 0});
  corr_.reserve(std::size_t(w) * h / 4);
  for (int y = 0; y < h; ++y) {
    row_ranges_[y].first = int(corr_.size());
    for (int x = 0; x < w; ++x) {
      if (!cur.valid(x, y)) continue;
      if (invalid && (*invalid)(x, y)) continue;
      const Eigen::Vector3d v_cur = cur.vertex(x, y).cast<double>();
      const Eigen::Vector3d p = T.R * v_cur + T.t;
      if (p.z() <= 1e-9) continue;
      const int u = int(std::lround(ref.K.fx * p.x() / p.z() + ref.K.cx));
      const int v = int(std::lround(ref.K.fy * p.y() / p.z() + ref.K.cy));
      if (u < 0 || v < 0 || u >= ref.width() || v >= ref.height()) continue;
      if (!ref.valid(u, v)) continue;
      const Eigen::Vector3d v_ref = ref.vertex(u, v).cast<double>();
      if ((v_ref - p).squaredNorm() > dist2) continue;
      const Eigen::Vector3d n_ref = ref.normal(u, v).cast<double>();
      const Eigen::Vector3d n_cur = T.R * cur.normal(x, y).cast<double>();
      if (n_ref.dot(n_cur) < cos_angle) continue;
      Correspondence c;
      c.v_cur = v_cur;
      c.v_ref = v_ref;
      c.n_ref = n_ref;
      c.i_cur = cur.intensity(x, y);
      c.cur_index = y * w + x;
      corr_.push_back(c);
    }
    row_ranges_[y].second = int(corr_.size());
  }
}

double TrackingProblem::cost(const Pose& T) const {
  if (corr_.empty()) return 0.0;
  const int rows = int(row_ranges_.size());
  std::vector<double> row_cost(rows, 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < rows; ++y) {
    double c = 0;
    for (int i = row_ranges_[y].first; i < row_ranges_[y].second; ++i) {
      const CorrTerms t = evaluate_correspondence(corr_[i], ref_, T.R, T.t);
      c += t.r_icp * t.r_icp;
      if (t.has_rgb) c += lambda_ * t.r_rgb * t.r_rgb;
    }
    row_cost[y] = c;
  }
  double total = 0;
  for (double c : row_cost) total += c;  // fixed-order combine
  return total / double(corr_.size());
}

double TrackingProblem::cost_and_gradient(const Pose& T, Vector6d& gradient) const {
  gradient.setZero();
  if (corr_.empty()) return 0.0;
  double total = 0;
  for (const Correspondence& c : corr_) {
    const CorrTerms t = evaluate_correspondence(c, ref_, T.R, T.t);
    total += t.r_icp * t.r_icp;
    gradient += 2.0 * t.r_icp * t.J_icp;
    if (t.has_rgb) {
      total += lambda_ * t.r_rgb * t.r_rgb;
      gradient += 2.0 * lambda_ * t.r_rgb * t.J_rgb;
    }
  }
  gradient /= double(corr_.size());
  return total / double(corr_.size());
}

double TrackingProblem::normal_equations(const Pose& T, Matrix6d& JtJ, Vector6d& Jtr) const {
  JtJ.setZero();
  Jtr.setZero();
  if (corr_.empty()) return 0.0;
  const int rows = int(row_ranges_.size());
  std::vector<Matrix6d> row_JtJ(rows, Matrix6d::Zero());
  std::vector<Vector6d> row_Jtr(rows, Vector6d::Zero());
  std::vector<double> row_cost(rows, 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < rows; ++y) {
    Matrix6d A = Matrix6d::Zero();
    Vector6d b = Vector6d::Zero();
    double c = 0;
    for (int i = row_ranges_[y].first; i < row_ranges_[y].second; ++i) {
      const CorrTerms t = evaluate_correspondence(corr_[i], ref_, T.R, T.t);
      A += t.J_icp * t.J_icp.transpose();
      b += t.r_icp * t.J_icp;
      c += t.r_icp * t.r_icp;
      if (t.has_rgb) {
        A += lambda_ * (t.J_rgb * t.J_rgb.transpose());
        b += lambda_ * t.r_rgb * t.J_rgb;
        c += lambda_ * t.r_rgb * t.r_rgb;
      }
    }
    row_JtJ[y] = A;
    row_Jtr[y] = b;
    row_cost[y] = c;
  }
  double total = 0;
  for (int y = 0; y < rows; ++y) {  // fixed-order combine
    JtJ += row_JtJ[y];
    Jtr += row_Jtr[y];
    total += row_cost[y];
  }
  return total / double(corr_.size());
}

namespace serial {
double normal_equations(const std::vector<TrackingProblem::Correspondence>& corr,
                        const PyramidLevel& ref, double lambda, const Pose& T, Matrix6d& JtJ,
                        Vector6d& Jtr) {
  JtJ.setZero();
  Jtr.setZero();
  double total = 0;
  for (const auto& c : corr) {
    const CorrTerms t = evaluate_correspondence(c, ref, T.R, T.t);
    JtJ += t.J_icp * t.J_icp.transpose();
    Jtr += t.r_icp * t.J_icp;
    total += t.r_icp * t.r_icp;
    if (t.has_rgb) {
      JtJ += lambda * (t.J_rgb * t.J_rgb.transpose());
      Jtr += lambda * t.r_rgb * t.J_rgb;
      total += lambda * t.r_rgb * t.r_rgb;
    }
  }
  return corr.empty() ? 0.0 : total / double(corr.size());
}
}  // namespace serial

namespace {

void fill_residual_map(const PyramidLevel& ref, const PyramidLevel& cur, const Pose& T,
                       const TrackingParams& params, GrayF& residual) {
  residual = GrayF(cur.width(), cur.height(), -1.0f);
  const float cap = float(params.residual_cap);
  const double dist2 = params.dist_thresh * params.dist_thresh;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < cur.height(); ++y) {
    for (int x = 0; x < cur.width(); ++x) {
      if (!cur.valid(x, y)) continue;
      const Eigen::Vector3d p = T.R * cur.vertex(x, y).cast<double>() + T.t;
      if (p.z() <= 1e-9) continue;
      const int u = int(std::lround(ref.K.fx * p.x() / p.z() + ref.K.cx));
      const int v = int(std::lround(ref.K.fy * p.y() / p.z() + ref.K.cy));
      if (u < 0 || v < 0 || u >= ref.width() || v >= ref.height()) continue;
      if (!ref.valid(u, v)) continue;
      const Eigen::Vector3d diff = ref.vertex(u, v).cast<double>() - p;
      if (diff.squaredNorm() > dist2) {
        // broken association reads as a full-scale mismatch
        residual(x, y) = cap;
      } else {
        const double r = diff.dot(ref.normal(u, v).cast<double>());
        residual(x, y) = std::min(cap, float(r * r));
      }
    }
  }
}

}  // namespace

TrackingResult track(const ReferenceFrame& reference, const std::vector<PyramidLevel>& current,
                     const Pose& init, const Mask* invalid_mask, const TrackingParams& params) {
  TrackingResult result;
  result.pose = init;
  if (reference.pyramid.empty() || current.empty()) return result;

  const int levels = int(std::min(reference.pyramid.size(), current.size()));
  std::vector<Mask> mask_pyr;
  if (invalid_mask) {
    mask_pyr.push_back(*invalid_mask);
    for (int l = 1; l < levels; ++l) mask_pyr.push_back(downsample_mask(mask_pyr.back()));
  }

  Pose T = reference.render_pose.inverse() * init;  // current camera -> reference camera
  bool failed = false;
  for (int level = levels - 1; level >= 0 && !failed; --level) {
    const PyramidLevel& ref = reference.pyramid[level];
    const PyramidLevel& cur = current[level];
    const int iters = params.iterations[std::min(level, int(params.iterations.size()) - 1)];
    const int min_inliers = scaled_threshold(params.min_inliers, cur.width(), cur.height(), 30);
    for (int it = 0; it < iters; ++it) {
      TrackingProblem problem(ref, cur, invalid_mask ? &mask_pyr[level] : nullptr, T, params);
      if (problem.count() < min_inliers) {
        failed = true;
        break;
      }
      if (level == 0) result.inlier_count = problem.count();
      Matrix6d JtJ;
      Vector6d Jtr;
      const double cost0 = problem.normal_equations(T, JtJ, Jtr);
      const Vector6d delta = JtJ.ldlt().solve(-Jtr);
      if (!delta.allFinite()) break;
      double alpha = 1.0;
      bool accepted = false;
      Pose T_next;
      double cost_next = 0;
      for (int halving = 0; halving <= params.max_step_halvings; ++halving) {
        T_next = se3_exp(Twist::from_vector(alpha * delta)) * T;
        T_next.orthonormalize();
        cost_next = problem.cost(T_next);
        if (cost_next <= cost0 * (1.0 + 1e-12) + 1e-18) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
      T = T_next;
      result.steps.push_back({level, cost0, cost_next});
      ++result.iterations_used;
      if ((alpha * delta).norm() < params.twist_eps) break;
    }
  }

  if (failed) {
    result.pose = init;
    result.converged = false;
    const Pose T_init = reference.render_pose.inverse() * init;
    fill_residual_map(reference.pyramid[0], current[0], T_init, params, result.residual);
    return result;
  }
  result.pose = reference.render_pose * T;
  result.pose.orthonormalize();
  result.converged = true;
  fill_residual_map(reference.pyramid[0], current[0], T, params, result.residual);
  if (result.inlier_count == 0) {
    // levels may have exited before reaching the finest problem; count there
    TrackingProblem problem(reference.pyramid[0], current[0],
                            invalid_mask ? &mask_pyr[0] : nullptr, T, params);
    result.inlier_count = problem.count();
  }
  return result;
}

TrackingResult track(const ReferenceFrame& reference, const Frame& current, const Pose& init,
                     const Mask* invalid_mask, const TrackingParams& params) {
  return track(reference, build_frame_pyramid(current, params.pyramid_levels), init, invalid_mask,
               params);
}

MultiTrackOutput track_all_maps(const std::vector<SurfelMap>& maps,
                                const std::map<int, Pose>& previous_poses,
                                const std::vector<PyramidLevel>& current,
                                const TrackingParams& params) {
  MultiTrackOutput out;
  if (current.empty()) return out;
  const Intrinsics& K = current[0].K;
  const int min_visible = scaled_threshold(params.min_visible_pixels, K.width, K.height, 100);
  for (const SurfelMap& map : maps) {
    const auto it = previous_poses.find(map.map_id);
    if (it == previous_poses.end()) continue;
    ReferenceFrame ref = render_reference(map, it->second, K, int(current.size()));
    if (ref.valid_count < min_visible) {
      TrackingResult r;
      r.pose = it->second;
      r.visible = false;
      out.results[map.map_id] = std::move(r);
      continue;
    }
    TrackingResult r = track(ref, current, it->second, nullptr, params);
    r.visible = true;
    out.results[map.map_id] = std::move(r);
    if (map.kind == MapKind::kStatic) out.static_reference = std::move(ref);
  }
  return out;
}

TrackingResult refine_static_pose(const ReferenceFrame& static_reference,
                                  const std::vector<PyramidLevel>& current,
                                  const TrackingResult& stage1, const Mask& invalid,
                                  const TrackingParams& params) {
  TrackingResult r = track(static_reference, current, stage1.pose, &invalid, params);
  if (!r.converged) {
    // degenerate mask: fall back to the stage-1 estimate
    r.pose = stage1.pose;
  }
  return r;
}

}  // namespace dynsurf
