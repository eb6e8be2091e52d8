#pragma once

#include <optional>

#include <Eigen/Core>

#include "mvsweep/io.h"
#include "mvsweep/tensor.h"

namespace mvsweep {

// Pixel convention: integer index (x, y) of an H x W grid covers
// [x, x + 1) x [y, y + 1); its center is at (x + 0.5, y + 0.5). With this
// convention, scaling the first two rows of K by s maps exactly between a
// full-resolution image and its area-downsampled version.

struct CameraView {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  // World-to-camera: X_cam = R * X_world + t.
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  Tensor image;  // H x W x 3 in [0, 1]; may be empty for geometry-only use
  double d_min = 0.0;
  double d_max = 0.0;

  // Throws std::invalid_argument when an invariant is violated.
  void Validate() const;
  Eigen::Vector3d Center() const { return -R.transpose() * t; }
};

CameraView MakeCameraView(const CameraFile& cam, Tensor image);
CameraFile ToCameraFile(const CameraView& view, int d_num);

struct RelativePose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
};

// Transform taking reference-camera coordinates to source-camera coordinates.
RelativePose ComputeRelativePose(const CameraView& ref, const CameraView& src);

// p' = K_src (R K_ref^-1 [u v 1]^T d + t), dehomogenized. Returns nullopt when
// the point lands behind the source camera (q_z <= 1e-8).
std::optional<Eigen::Vector2d> WarpPixel(const Eigen::Vector2d& pixel, double depth,
                                         const Eigen::Matrix3d& K_ref,
                                         const Eigen::Matrix3d& K_src,
                                         const RelativePose& pose);

Eigen::Matrix3d ScaleIntrinsics(const Eigen::Matrix3d& K, double scale);

// World point seen at `pixel` with camera-frame depth z.
Eigen::Vector3d Unproject(const CameraView& cam, const Eigen::Vector2d& pixel, double depth);

struct Projection {
  Eigen::Vector2d pixel;
  double depth;
};
std::optional<Projection> Project(const CameraView& cam, const Eigen::Vector3d& world);

struct DepthHypotheses {
  int stage = 1;
  Tensor values;          // D x H x W, strictly increasing along D
  double interval = 0.0;  // inverse-depth spacing
  double d_min = 0.0;
  double d_max = 0.0;

  int num() const { return values.dim(0); }
  int height() const { return values.dim(1); }
  int width() const { return values.dim(2); }
};

// Uniform inverse-depth samples over [1/d_max, 1/d_min], identical at every
// pixel.
DepthHypotheses InitHypotheses(double d_min, double d_max, int num, int height, int width);

// Per-pixel window of `num` samples in inverse depth, centered on
// 1/prev_depth with spacing base_interval / 2^(stage-1), shifted (or, when
// wider than the global range, shrunk) to stay inside [1/d_max, 1/d_min].
// Pixels with prev_depth <= 0 are centered on the middle of the range.
DepthHypotheses RefineHypotheses(const Tensor& prev_depth, int stage, double base_interval,
                                 int num, double d_min, double d_max);

// Nearest-neighbor: out[y][x] = in[y / factor][x / factor].
Tensor UpsampleDepth(const Tensor& depth, int factor = 2);

struct WarpedFeature {
  Tensor data;      // C x D x H x W
  Tensor validity;  // D x H x W in {0, 1}
};

// Bilinearly samples `src_feat` (C x H x W) at the warp of every reference
// pixel under every hypothesis. Intrinsics must already match the feature
// resolution. Out-of-bounds and behind-camera samples are 0 with validity 0.
WarpedFeature WarpFeature(const Tensor& src_feat, const DepthHypotheses& hyp,
                          const Eigen::Matrix3d& K_ref, const Eigen::Matrix3d& K_src,
                          const RelativePose& pose);

}  // namespace mvsweep
