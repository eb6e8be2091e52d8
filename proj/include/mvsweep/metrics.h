#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "mvsweep/io.h"
#include "mvsweep/tensor.h"

namespace mvsweep {

inline constexpr std::array<double, 3> kDepthErrorThresholds = {2.0, 4.0, 8.0};

// Raw counts so several maps can be accumulated before dividing.
struct DepthErrorCounts {
  size_t valid = 0;
  std::array<size_t, 3> exceeding{};

  DepthErrorCounts& operator+=(const DepthErrorCounts& o);
};

struct DepthErrorRatios {
  std::array<double, 3> e{};  // fraction of valid pixels with |pred - gt| > threshold
  size_t valid = 0;
};

// Pixels whose ground truth is 0 (or not finite) are skipped.
DepthErrorCounts CountDepthErrors(const Tensor& pred, const Tensor& gt,
                                  const std::array<double, 3>& thresholds = kDepthErrorThresholds);

// Throws std::invalid_argument when no pixel is valid.
DepthErrorRatios ToRatios(const DepthErrorCounts& counts);

DepthErrorRatios ComputeDepthErrorRatios(
    const Tensor& pred, const Tensor& gt,
    const std::array<double, 3>& thresholds = kDepthErrorThresholds);

struct CloudMetrics {
  double acc = 0.0;
  double comp = 0.0;
  double overall = 0.0;
};

inline constexpr double kDefaultDistanceClamp = 20.0;

// Exact nearest-neighbor queries over a uniform grid.
class PointIndex {
 public:
  explicit PointIndex(const std::vector<Eigen::Vector3f>& points);

  // Euclidean distance from q to the nearest indexed point, or `limit` when
  // nothing lies closer than that.
  double NearestDistance(const Eigen::Vector3d& q, double limit) const;

 private:
  struct Cell {
    int begin = 0;
    int end = 0;
  };
  const Cell* Find(int64_t x, int64_t y, int64_t z) const;

  std::vector<Eigen::Vector3d> sorted_;
  std::vector<std::pair<uint64_t, Cell>> cells_;  // sorted by key
  Eigen::Vector3d origin_;
  Eigen::Array3i extent_;
  double cell_ = 1.0;
};

// Mean over `from` of the clamped distance to the nearest point of `to`.
double MeanClampedDistance(const std::vector<Eigen::Vector3f>& from,
                           const std::vector<Eigen::Vector3f>& to, double clamp);

// acc: pred -> gt, comp: gt -> pred, overall their mean. Throws
// std::invalid_argument on an empty cloud or a non-positive clamp.
CloudMetrics ComputeCloudMetrics(const PointCloud& pred, const PointCloud& gt,
                                 double clamp = kDefaultDistanceClamp);

}  // namespace mvsweep
