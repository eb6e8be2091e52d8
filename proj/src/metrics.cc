#include "mvsweep/metrics.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mvsweep {

DepthErrorCounts& DepthErrorCounts::operator+=(const DepthErrorCounts& o) {
  valid += o.valid;
  for (size_t i = 0; i < exceeding.size(); ++i) exceeding[i] += o.exceeding[i];
  return *this;
}

DepthErrorCounts CountDepthErrors(const Tensor& pred, const Tensor& gt,
                                  const std::array<double, 3>& thresholds) {
  if (pred.shape() != gt.shape() || gt.ndim() != 2) {
    throw std::invalid_argument("depth maps differ in shape: " + pred.ShapeString() +
                                " vs " + gt.ShapeString());
  }
  DepthErrorCounts c;
  for (size_t i = 0; i < gt.size(); ++i) {
    const double g = gt[i];
    if (!(g > 0.0) || !std::isfinite(g)) continue;
    ++c.valid;
    const double err = std::abs(static_cast<double>(pred[i]) - g);
    for (size_t k = 0; k < thresholds.size(); ++k) {
      // A non-finite prediction exceeds every threshold.
      if (!(err <= thresholds[k])) ++c.exceeding[k];
    }
  }
  return c;
}

DepthErrorRatios ToRatios(const DepthErrorCounts& counts) {
  if (counts.valid == 0) throw std::invalid_argument("no valid ground-truth pixels");
  DepthErrorRatios r;
  r.valid = counts.valid;
  for (size_t k = 0; k < r.e.size(); ++k) {
    r.e[k] = static_cast<double>(counts.exceeding[k]) / static_cast<double>(counts.valid);
  }
  return r;
}

DepthErrorRatios ComputeDepthErrorRatios(const Tensor& pred, const Tensor& gt,
                                         const std::array<double, 3>& thresholds) {
  return ToRatios(CountDepthErrors(pred, gt, thresholds));
}

namespace {

uint64_t CellKey(int64_t x, int64_t y, int64_t z, const Eigen::Array3i& extent) {
  return (static_cast<uint64_t>(x) * extent.y() + static_cast<uint64_t>(y)) * extent.z() +
         static_cast<uint64_t>(z);
}

}  // namespace

PointIndex::PointIndex(const std::vector<Eigen::Vector3f>& points) {
  if (points.empty()) throw std::invalid_argument("cannot index an empty point set");
  Eigen::Vector3d lo = points[0].cast<double>();
  Eigen::Vector3d hi = lo;
  for (const auto& p : points) {
    lo = lo.cwiseMin(p.cast<double>());
    hi = hi.cwiseMax(p.cast<double>());
  }
  const double diag = (hi - lo).norm();
  cell_ = diag > 0.0 ? diag / std::cbrt(static_cast<double>(points.size())) : 1.0;
  origin_ = lo;
  for (int a = 0; a < 3; ++a) {
    extent_[a] = static_cast<int>(std::floor((hi[a] - lo[a]) / cell_)) + 1;
  }

  std::vector<std::pair<uint64_t, int>> keyed(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    const Eigen::Vector3d rel = (points[i].cast<double>() - origin_) / cell_;
    int64_t c[3];
    for (int a = 0; a < 3; ++a) {
      c[a] = std::clamp<int64_t>(static_cast<int64_t>(std::floor(rel[a])), 0, extent_[a] - 1);
    }
    keyed[i] = {CellKey(c[0], c[1], c[2], extent_), static_cast<int>(i)};
  }
  std::sort(keyed.begin(), keyed.end());
  sorted_.reserve(points.size());
  for (size_t i = 0; i < keyed.size(); ++i) {
    if (i == 0 || keyed[i].first != keyed[i - 1].first) {
      cells_.push_back({keyed[i].first, {static_cast<int>(i), static_cast<int>(i)}});
    }
    cells_.back().second.end = static_cast<int>(i) + 1;
    sorted_.push_back(points[keyed[i].second].cast<double>());
  }
}

const PointIndex::Cell* PointIndex::Find(int64_t x, int64_t y, int64_t z) const {
  if (x < 0 || y < 0 || z < 0 || x >= extent_.x() || y >= extent_.y() || z >= extent_.z()) {
    return nullptr;
  }
  const uint64_t key = CellKey(x, y, z, extent_);
  const auto it = std::lower_bound(cells_.begin(), cells_.end(), key,
                                   [](const auto& c, uint64_t k) { return c.first < k; });
  if (it == cells_.end() || it->first != key) return nullptr;
  return &it->second;
}

double PointIndex::NearestDistance(const Eigen::Vector3d& q, double limit) const {
  int64_t c[3];
  int64_t r_max = 0;
  for (int a = 0; a < 3; ++a) {
    c[a] = static_cast<int64_t>(std::floor((q[a] - origin_[a]) / cell_));
    r_max = std::max({r_max, std::abs(c[a]), std::abs(extent_[a] - 1 - c[a])});
  }
  double best2 = limit * limit;
  // After ring r every unvisited point is at least r * cell_ away.
  for (int64_t r = 0; r <= r_max; ++r) {
    for (int64_t dx = -r; dx <= r; ++dx) {
      for (int64_t dy = -r; dy <= r; ++dy) {
        const bool edge = std::abs(dx) == r || std::abs(dy) == r;
        for (int64_t dz = -r; dz <= r; dz += (edge || r == 0) ? 1 : 2 * r) {
          const Cell* cell = Find(c[0] + dx, c[1] + dy, c[2] + dz);
          if (!cell) continue;
          for (int i = cell->begin; i < cell->end; ++i) {
            best2 = std::min(best2, (sorted_[i] - q).squaredNorm());
          }
        }
      }
    }
    const double reach = static_cast<double>(r) * cell_;
    if (reach * reach >= best2) break;
  }
  return std::min(std::sqrt(best2), limit);
}

double MeanClampedDistance(const std::vector<Eigen::Vector3f>& from,
                           const std::vector<Eigen::Vector3f>& to, double clamp) {
  const PointIndex index(to);
  double sum = 0.0;
  for (const auto& p : from) sum += index.NearestDistance(p.cast<double>(), clamp);
  return sum / static_cast<double>(from.size());
}

CloudMetrics ComputeCloudMetrics(const PointCloud& pred, const PointCloud& gt, double clamp) {
  if (pred.points.empty() || gt.points.empty()) {
    throw std::invalid_argument("cloud metrics need two non-empty clouds");
  }
  if (!(clamp > 0.0)) throw std::invalid_argument("distance clamp must be positive");
  CloudMetrics m;
  m.acc = MeanClampedDistance(pred.points, gt.points, clamp);
  m.comp = MeanClampedDistance(gt.points, pred.points, clamp);
  m.overall = (m.acc + m.comp) / 2.0;
  return m;
}

}  // namespace mvsweep
