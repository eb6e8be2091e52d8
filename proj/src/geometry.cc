#include "mvsweep/geometry.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/LU>

namespace mvsweep {

namespace {
constexpr double kBehindCamera = 1e-8;
}

void CameraView::Validate() const {
  const Eigen::Matrix3d residual = R * R.transpose() - Eigen::Matrix3d::Identity();
  if (residual.cwiseAbs().maxCoeff() > 1e-4 || std::abs(R.determinant() - 1.0) > 1e-4) {
    throw std::invalid_argument("camera rotation is not a proper rotation");
  }
  if (K(2, 2) != 1.0 || K(0, 0) <= 0.0 || K(1, 1) <= 0.0 || K(1, 0) != 0.0 ||
      K(2, 0) != 0.0 || K(2, 1) != 0.0) {
    throw std::invalid_argument("camera intrinsics are not an upper-triangular pinhole K");
  }
  if (!(d_min > 0.0 && d_min < d_max)) {
    throw std::invalid_argument("camera depth range must satisfy 0 < d_min < d_max");
  }
  if (!image.empty() && (image.ndim() != 3 || image.dim(2) != 3)) {
    throw std::invalid_argument("camera image must be H x W x 3, got " + image.ShapeString());
  }
}

CameraView MakeCameraView(const CameraFile& cam, Tensor image) {
  CameraView view;
  view.K = cam.K;
  view.R = cam.R;
  view.t = cam.t;
  view.image = std::move(image);
  view.d_min = cam.d_min;
  view.d_max = cam.d_max;
  view.Validate();
  return view;
}

CameraFile ToCameraFile(const CameraView& view, int d_num) {
  CameraFile cam;
  cam.K = view.K;
  cam.R = view.R;
  cam.t = view.t;
  cam.d_min = view.d_min;
  cam.d_max = view.d_max;
  cam.d_num = d_num;
  cam.d_interval = d_num > 1 ? (view.d_max - view.d_min) / (d_num - 1) : 0.0;
  return cam;
}

RelativePose ComputeRelativePose(const CameraView& ref, const CameraView& src) {
  RelativePose pose;
  pose.R = src.R * ref.R.transpose();
  pose.t = src.t - pose.R * ref.t;
  return pose;
}

std::optional<Eigen::Vector2d> WarpPixel(const Eigen::Vector2d& pixel, double depth,
                                         const Eigen::Matrix3d& K_ref,
                                         const Eigen::Matrix3d& K_src,
                                         const RelativePose& pose) {
  const Eigen::Vector3d p(pixel.x(), pixel.y(), 1.0);
  const Eigen::Vector3d q = K_src * (pose.R * (K_ref.inverse() * p) * depth + pose.t);
  if (q.z() <= kBehindCamera) return std::nullopt;
  return Eigen::Vector2d(q.x() / q.z(), q.y() / q.z());
}

Eigen::Matrix3d ScaleIntrinsics(const Eigen::Matrix3d& K, double scale) {
  Eigen::Matrix3d out = K;
  out.row(0) *= scale;
  out.row(1) *= scale;
  return out;
}

Eigen::Vector3d Unproject(const CameraView& cam, const Eigen::Vector2d& pixel, double depth) {
  const Eigen::Vector3d ray = cam.K.inverse() * Eigen::Vector3d(pixel.x(), pixel.y(), 1.0);
  return cam.R.transpose() * (ray * depth - cam.t);
}

std::optional<Projection> Project(const CameraView& cam, const Eigen::Vector3d& world) {
  const Eigen::Vector3d x_cam = cam.R * world + cam.t;
  if (x_cam.z() <= kBehindCamera) return std::nullopt;
  const Eigen::Vector3d q = cam.K * x_cam;
  return Projection{Eigen::Vector2d(q.x() / q.z(), q.y() / q.z()), x_cam.z()};
}

DepthHypotheses InitHypotheses(double d_min, double d_max, int num, int height, int width) {
  if (!(d_min > 0.0 && d_min < d_max) || !std::isfinite(d_max)) {
    throw std::invalid_argument("degenerate depth range [" + std::to_string(d_min) + ", " +
                                std::to_string(d_max) + "]");
  }
  if (num < 2) throw std::invalid_argument("at least two depth hypotheses are required");
  DepthHypotheses hyp;
  hyp.stage = 1;
  hyp.d_min = d_min;
  hyp.d_max = d_max;
  const double inv_near = 1.0 / d_min;
  const double inv_far = 1.0 / d_max;
  hyp.interval = (inv_near - inv_far) / (num - 1);
  hyp.values = Tensor({num, height, width});
  const size_t plane = static_cast<size_t>(height) * width;
  for (int j = 0; j < num; ++j) {
    // j = 0 is the nearest sample (largest inverse depth).
    const double inv = j == 0 ? inv_near : inv_near - j * hyp.interval;
    const float depth = j == num - 1 ? static_cast<float>(d_max) : static_cast<float>(1.0 / inv);
    std::fill_n(hyp.values.raw() + j * plane, plane, depth);
  }
  return hyp;
}

DepthHypotheses RefineHypotheses(const Tensor& prev_depth, int stage, double base_interval,
                                 int num, double d_min, double d_max) {
  if (stage < 2 || stage > 4) {
    throw std::invalid_argument("refinement stage must be in 2..4, got " + std::to_string(stage));
  }
  if (prev_depth.ndim() != 2) {
    throw std::invalid_argument("previous depth must be H x W, got " + prev_depth.ShapeString());
  }
  if (!(d_min > 0.0 && d_min < d_max) || num < 2 || !(base_interval > 0.0)) {
    throw std::invalid_argument("invalid refinement parameters");
  }
  const int h = prev_depth.dim(0);
  const int w = prev_depth.dim(1);
  const double inv_lo = 1.0 / d_max;
  const double inv_hi = 1.0 / d_min;
  const double range = inv_hi - inv_lo;
  double spacing = base_interval / static_cast<double>(1 << (stage - 1));
  if (spacing * (num - 1) > range) spacing = range / (num - 1);
  const double width_inv = spacing * (num - 1);

  DepthHypotheses hyp;
  hyp.stage = stage;
  hyp.interval = spacing;
  hyp.d_min = d_min;
  hyp.d_max = d_max;
  hyp.values = Tensor({num, h, w});
  const size_t plane = static_cast<size_t>(h) * w;
  for (size_t i = 0; i < plane; ++i) {
    const float prev = prev_depth[i];
    const double center = (prev > 0.0f && std::isfinite(prev)) ? 1.0 / prev : 0.5 * (inv_lo + inv_hi);
    double lo = center - 0.5 * width_inv;
    lo = std::clamp(lo, inv_lo, inv_hi - width_inv);
    for (int k = 0; k < num; ++k) {
      // k = 0 is the nearest sample (largest inverse depth).
      double inv = lo + (num - 1 - k) * spacing;
      inv = std::clamp(inv, inv_lo, inv_hi);
      hyp.values[k * plane + i] = static_cast<float>(1.0 / inv);
    }
  }
  return hyp;
}

Tensor UpsampleDepth(const Tensor& depth, int factor) {
  if (depth.ndim() != 2 || factor < 1) {
    throw std::invalid_argument("upsampling expects an H x W map and a positive factor");
  }
  const int h = depth.dim(0);
  const int w = depth.dim(1);
  Tensor out({h * factor, w * factor});
  for (int y = 0; y < h * factor; ++y) {
    for (int x = 0; x < w * factor; ++x) out.at(y, x) = depth.at(y / factor, x / factor);
  }
  return out;
}

WarpedFeature WarpFeature(const Tensor& src_feat, const DepthHypotheses& hyp,
                          const Eigen::Matrix3d& K_ref, const Eigen::Matrix3d& K_src,
                          const RelativePose& pose) {
  if (src_feat.ndim() != 3 || hyp.values.ndim() != 3 || src_feat.dim(1) != hyp.height() ||
      src_feat.dim(2) != hyp.width()) {
    throw std::invalid_argument("feature " + src_feat.ShapeString() +
                                " does not match hypotheses " + hyp.values.ShapeString());
  }
  const int channels = src_feat.dim(0);
  const int num = hyp.num();
  const int h = hyp.height();
  const int w = hyp.width();
  const size_t plane = static_cast<size_t>(h) * w;

  WarpedFeature out{Tensor({channels, num, h, w}), Tensor({num, h, w})};
  const Eigen::Matrix3d rot = K_src * pose.R * K_ref.inverse();
  const Eigen::Vector3d trans = K_src * pose.t;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Eigen::Vector3d ray = rot * Eigen::Vector3d(x + 0.5, y + 0.5, 1.0);
      const size_t pix = static_cast<size_t>(y) * w + x;
      for (int j = 0; j < num; ++j) {
        const double d = hyp.values[j * plane + pix];
        const Eigen::Vector3d q = ray * d + trans;
        if (q.z() <= kBehindCamera) continue;
        const double sx = q.x() / q.z() - 0.5;
        const double sy = q.y() / q.z() - 0.5;
        if (!(sx >= 0.0 && sx <= w - 1 && sy >= 0.0 && sy <= h - 1)) continue;
        const int x0 = static_cast<int>(sx);
        const int y0 = static_cast<int>(sy);
        const int x1 = std::min(x0 + 1, w - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const float fx = static_cast<float>(sx - x0);
        const float fy = static_cast<float>(sy - y0);
        const float w00 = (1.0f - fx) * (1.0f - fy);
        const float w01 = fx * (1.0f - fy);
        const float w10 = (1.0f - fx) * fy;
        const float w11 = fx * fy;
        out.validity[j * plane + pix] = 1.0f;
        for (int c = 0; c < channels; ++c) {
          out.data.at(c, j, y, x) = w00 * src_feat.at(c, y0, x0) + w01 * src_feat.at(c, y0, x1) +
                                    w10 * src_feat.at(c, y1, x0) + w11 * src_feat.at(c, y1, x1);
        }
      }
    }
  }
  return out;
}

}  // namespace mvsweep
