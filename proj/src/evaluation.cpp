#include "dynsurf/evaluation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dynsurf {

Pose align_rigid(const std::vector<Eigen::Vector3d>& src, const std::vector<Eigen::Vector3d>& dst) {
  if (src.size() != dst.size() || src.size() < 2) {
    throw std::runtime_error("align_rigid needs two equally sized point lists with >= 2 points");
  }
  Eigen::Vector3d mu_s = Eigen::Vector3d::Zero(), mu_d = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_s += src[i];
    mu_d += dst[i];
  }
  mu_s /= double(src.size());
  mu_d /= double(dst.size());
  Eigen::Matrix3d W = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    W += (dst[i] - mu_d) * (src[i] - mu_s).transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(W, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) D(2, 2) = -1;
  Pose T;
  T.R = svd.matrixU() * D * svd.matrixV().transpose();
  T.t = mu_d - T.R * mu_s;
  return T;
}

AteReport ate_rmse(const std::vector<TrajectoryRecord>& estimated,
                   const std::vector<TrajectoryRecord>& ground_truth, double max_assoc_gap) {
  std::vector<double> ts_est, ts_gt;
  for (const auto& r : estimated) ts_est.push_back(r.timestamp);
  for (const auto& r : ground_truth) ts_gt.push_back(r.timestamp);
  const auto pairs = associate_timestamps(ts_est, ts_gt, max_assoc_gap);
  if (pairs.size() < 2) throw std::runtime_error("fewer than 2 associable trajectory pairs");

  std::vector<Eigen::Vector3d> p_est, p_gt;
  for (auto [ie, ig] : pairs) {
    p_est.push_back(estimated[ie].translation);
    p_gt.push_back(ground_truth[ig].translation);
  }
  const Pose T = align_rigid(p_est, p_gt);

  std::vector<double> errors(p_est.size());
  double sq_sum = 0, sum = 0, max_err = 0;
  for (std::size_t i = 0; i < p_est.size(); ++i) {
    errors[i] = (T * p_est[i] - p_gt[i]).norm();
    sq_sum += errors[i] * errors[i];
    sum += errors[i];
    max_err = std::max(max_err, errors[i]);
  }
  std::sort(errors.begin(), errors.end());
  AteReport report;
  report.pairs_used = int(pairs.size());
  report.rmse = std::sqrt(sq_sum / double(errors.size()));
  report.mean = sum / double(errors.size());
  report.median = errors[errors.size() / 2];
  report.max = max_err;
  return report;
}

PointGrid::PointGrid(const std::vector<Eigen::Vector3f>& points, double cell)
    : cell_(cell), points_(&points) {
  Eigen::Vector3f lo = Eigen::Vector3f::Constant(std::numeric_limits<float>::max());
  Eigen::Vector3f hi = Eigen::Vector3f::Constant(std::numeric_limits<float>::lowest());
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  if (points.empty()) {
    lo.setZero();
    hi.setZero();
  }
  origin_ = lo;
  nx_ = std::max(1, int((hi.x() - lo.x()) / cell_) + 1);
  ny_ = std::max(1, int((hi.y() - lo.y()) / cell_) + 1);
  nz_ = std::max(1, int((hi.z() - lo.z()) / cell_) + 1);
  cells_.resize(std::size_t(nx_) * ny_ * nz_);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Eigen::Vector3f d = points[i] - origin_;
    const int cx = std::min(nx_ - 1, std::max(0, int(d.x() / cell_)));
    const int cy = std::min(ny_ - 1, std::max(0, int(d.y() / cell_)));
    const int cz = std::min(nz_ - 1, std::max(0, int(d.z() / cell_)));
    cells_[(std::size_t(cz) * ny_ + cy) * nx_ + cx].push_back(std::int32_t(i));
  }
}

bool PointGrid::any_within(const Eigen::Vector3f& p, double r) const {
  const Eigen::Vector3f d = p - origin_;
  const int cx = int(std::floor(d.x() / cell_));
  const int cy = int(std::floor(d.y() / cell_));
  const int cz = int(std::floor(d.z() / cell_));
  const float r2 = float(r * r);
  for (int z = cz - 1; z <= cz + 1; ++z) {
    if (z < 0 || z >= nz_) continue;
    for (int y = cy - 1; y <= cy + 1; ++y) {
      if (y < 0 || y >= ny_) continue;
      for (int x = cx - 1; x <= cx + 1; ++x) {
        if (x < 0 || x >= nx_) continue;
        for (std::int32_t i : cells_[(std::size_t(z) * ny_ + y) * nx_ + x]) {
          if (((*points_)[i] - p).squaredNorm() <= r2) return true;
        }
      }
    }
  }
  return false;
}

std::size_t count_within(const std::vector<Eigen::Vector3f>& queries, const PointGrid& grid,
                         double threshold) {
  const std::int64_t n = std::int64_t(queries.size());
  std::size_t count = 0;
#pragma omp parallel for schedule(static) reduction(+ : count)
  for (std::int64_t i = 0; i < n; ++i) {
    count += grid.any_within(queries[i], threshold) ? 1 : 0;
  }
  return count;
}

namespace serial {
std::size_t count_within(const std::vector<Eigen::Vector3f>& queries,
                         const std::vector<Eigen::Vector3f>& targets, double threshold) {
  const float r2 = float(threshold * threshold);
  std::size_t count = 0;
  for (const auto& q : queries) {
    for (const auto& t : targets) {
      if ((t - q).squaredNorm() <= r2) {
        ++count;
        break;
      }
    }
  }
  return count;
}
}  // namespace serial

namespace {

std::vector<Eigen::Vector3f> subsample(const std::vector<Eigen::Vector3f>& pts, std::size_t max_n) {
  if (pts.size() <= max_n) return pts;
  std::vector<Eigen::Vector3f> out;
  const std::size_t stride = (pts.size() + max_n - 1) / max_n;
  for (std::size_t i = 0; i < pts.size(); i += stride) out.push_back(pts[i]);
  return out;
}

}  // namespace

CloudCompareReport cloud_compare(std::vector<Eigen::Vector3f> reconstructed,
                                 const std::vector<Eigen::Vector3f>& ground_truth,
                                 double inlier_threshold, bool align) {
  if (reconstructed.empty() || ground_truth.empty()) {
    throw std::runtime_error("cloud_compare: empty point cloud");
  }
  if (align) {
    // Point-to-point ICP on subsampled clouds, then apply to the full cloud.
    const auto src = subsample(reconstructed, 2000);
    const auto dst = subsample(ground_truth, 2000);
    Pose T;
    for (int it = 0; it < 30; ++it) {
      std::vector<Eigen::Vector3d> ps, pd;
      ps.reserve(src.size());
      pd.reserve(src.size());
      for (const auto& p : src) {
        const Eigen::Vector3f q = (T.R.cast<float>() * p + T.t.cast<float>());
        float best = std::numeric_limits<float>::max();
        const Eigen::Vector3f* best_pt = nullptr;
        for (const auto& g : dst) {
          const float d2 = (g - q).squaredNorm();
          if (d2 < best) {
            best = d2;
            best_pt = &g;
          }
        }
        ps.push_back(p.cast<double>());
        pd.push_back(best_pt->cast<double>());
      }
      const Pose T_next = align_rigid(ps, pd);
      const double change = (T_next.t - T.t).norm() + (T_next.R - T.R).norm();
      T = T_next;
      if (change < 1e-9) break;
    }
    for (auto& p : reconstructed) p = T.R.cast<float>() * p + T.t.cast<float>();
  }

  CloudCompareReport report;
  report.threshold = inlier_threshold;
  const PointGrid gt_grid(ground_truth, inlier_threshold);
  const PointGrid rec_grid(reconstructed, inlier_threshold);
  report.accuracy =
      double(count_within(reconstructed, gt_grid, inlier_threshold)) / double(reconstructed.size());
  report.completeness =
      double(count_within(ground_truth, rec_grid, inlier_threshold)) / double(ground_truth.size());
  return report;
}

bool stage_is_per_model(const std::string& name) {
  return name == stage_names::kInitialTracking || name == stage_names::kMapping;
}

TimingReport timing_report(const std::vector<FrameTiming>& frames) {
  TimingReport report;
  report.frames = int(frames.size());
  if (frames.empty()) return report;

  // Keep first-appearance order of stage names.
  std::vector<std::string> order;
  for (const auto& f : frames) {
    for (const auto& [name, ms] : f.stages) {
      if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
    }
  }

  double base_sum = 0;
  double per_model_ms_sum = 0;
  std::int64_t model_count_sum = 0;
  for (const auto& f : frames) {
    double frame_per_model = 0;
    for (const auto& [name, ms] : f.stages) {
      if (stage_is_per_model(name)) frame_per_model += ms;
    }
    base_sum += f.total_ms - frame_per_model;
    per_model_ms_sum += frame_per_model;
    model_count_sum += std::max(1, f.model_count);
  }
  report.base_ms = base_sum / double(frames.size());
  report.per_model_ms = model_count_sum ? per_model_ms_sum / double(model_count_sum) : 0.0;

  for (const auto& name : order) {
    StageRow row;
    row.name = name;
    row.per_model = stage_is_per_model(name);
    double ms_sum = 0;
    std::int64_t denom = 0;
    for (const auto& f : frames) {
      bool present = false;
      double ms = 0;
      for (const auto& [n, m] : f.stages) {
        if (n == name) {
          present = true;
          ms += m;
        }
      }
      if (!present) continue;
      ms_sum += ms;
      denom += row.per_model ? std::max(1, f.model_count) : 1;
    }
    row.mean_ms = denom ? ms_sum / double(denom) : 0.0;
    report.rows.push_back(row);
  }
  return report;
}

std::string TimingReport::plain_text() const {
  std::ostringstream out;
  out << "Component                     Runtime [ms]\n";
  char buf[128];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%-28s %8.2f%s\n", row.name.c_str(), row.mean_ms,
                  row.per_model ? " / model" : "");
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "%-28s %8.2f + %.2f / model\n", "Total", base_ms, per_model_ms);
  out << buf;
  return out.str();
}

std::string TimingReport::key_values() const {
  std::ostringstream out;
  const auto slug = [](std::string s) {
    for (char& c : s) c = c == ' ' ? '_' : char(std::tolower(c));
    return s;
  };
  for (const auto& row : rows) {
    out << "stage." << slug(row.name) << "_ms=" << row.mean_ms;
    if (row.per_model) out << " # per model";
    out << "\n";
  }
  out << "total.base_ms=" << base_ms << "\n";
  out << "total.per_model_ms=" << per_model_ms << "\n";
  out << "frames=" << frames << "\n";
  return out.str();
}

}  // namespace dynsurf
