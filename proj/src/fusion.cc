#include "mvsweep/fusion.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace mvsweep {

void FilterParams::Validate() const {
  if (!(disparity_threshold > 0.0) || !(prob_threshold > 0.0) || !(reproj_threshold_px > 0.0) ||
      num_consistent < 1) {
    throw std::invalid_argument("filter thresholds must be positive and num_consistent >= 1");
  }
}

namespace {

struct SourceCheck {
  bool geometric = false;  // round trip exists at all
  double pixel_error = 0.0;
  double depth_error = 0.0;  // relative
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  int src_x = 0;
  int src_y = 0;
};

// Depth of `view` at continuous pixel (u, v). Inverse depth is interpolated
// bilinearly when the four taps are valid and mutually consistent (inverse
// depth is affine on planes, so this is exact there); otherwise the nearest
// tap is used.
std::optional<double> SampleDepth(const Tensor& depth, double u, double v, double rel_tol) {
  const int h = depth.dim(0);
  const int w = depth.dim(1);
  const double sx = u - 0.5;
  const double sy = v - 0.5;
  if (!(sx > -0.5 && sx < w - 0.5 && sy > -0.5 && sy < h - 0.5)) return std::nullopt;
  const int nx = std::clamp(static_cast<int>(std::lround(sx)), 0, w - 1);
  const int ny = std::clamp(static_cast<int>(std::lround(sy)), 0, h - 1);
  const float nearest = depth.at(ny, nx);
  if (!(nearest > 0.0f)) return std::nullopt;

  // Border pixels extrapolate from the nearest 2x2 block.
  const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, std::max(w - 2, 0));
  const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, std::max(h - 2, 0));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const float taps[4] = {depth.at(y0, x0), depth.at(y0, x1), depth.at(y1, x0), depth.at(y1, x1)};
  const auto [lo, hi] = std::minmax({taps[0], taps[1], taps[2], taps[3]});
  if (!(lo > 0.0f) || (hi - lo) > rel_tol * lo) return static_cast<double>(nearest);
  const double fx = x1 > x0 ? sx - x0 : 0.0;
  const double fy = y1 > y0 ? sy - y0 : 0.0;
  const double inv = (1 - fx) * (1 - fy) / taps[0] + fx * (1 - fy) / taps[1] +
                     (1 - fx) * fy / taps[2] + fx * fy / taps[3];
  return 1.0 / inv;
}

SourceCheck CheckAgainst(const DepthView& ref, const Eigen::Vector2d& pixel, double depth,
                         const DepthView& src, double rel_tol) {
  SourceCheck out;
  const Eigen::Vector3d world = Unproject(ref.camera, pixel, depth);
  const auto proj = Project(src.camera, world);
  if (!proj) return out;
  const auto src_depth = SampleDepth(src.depth, proj->pixel.x(), proj->pixel.y(), rel_tol);
  if (!src_depth) return out;
  const Eigen::Vector3d back_world = Unproject(src.camera, proj->pixel, *src_depth);
  const auto back = Project(ref.camera, back_world);
  if (!back) return out;
  out.geometric = true;
  out.pixel_error = (back->pixel - pixel).norm();
  out.depth_error = std::abs(back->depth - depth) / depth;
  out.point = back_world;
  out.src_x = std::clamp(static_cast<int>(std::floor(proj->pixel.x())), 0, src.depth.dim(1) - 1);
  out.src_y = std::clamp(static_cast<int>(std::floor(proj->pixel.y())), 0, src.depth.dim(0) - 1);
  return out;
}

bool Passes(const SourceCheck& c, double reproj, double disparity) {
  return c.geometric && c.pixel_error < reproj && c.depth_error < disparity;
}

// Number of sources needed and the per-level scale of the thresholds; the
// static filter is the single level (num_consistent, 1).
struct Verdict {
  bool pass = false;
  double scale = 1.0;  // threshold multiplier at which the pixel passed
};

Verdict Decide(const std::vector<SourceCheck>& checks, const FilterParams& p) {
  if (p.mode == FilterMode::kStatic) {
    int support = 0;
    for (const auto& c : checks) support += Passes(c, p.reproj_threshold_px, p.disparity_threshold);
    return {support >= p.num_consistent, 1.0};
  }
  Verdict v;
  const int n_max = static_cast<int>(checks.size());
  for (int n = 1; n <= n_max; ++n) {
    const double scale = n / 4.0;
    int support = 0;
    for (const auto& c : checks) {
      support += Passes(c, scale * p.reproj_threshold_px, scale * p.disparity_threshold);
    }
    if (support >= n) v = {true, scale};
  }
  return v;
}

void CheckShapes(const DepthView& v) {
  if (v.depth.ndim() != 2 || v.confidence.shape() != v.depth.shape()) {
    throw std::invalid_argument("depth and confidence maps must be matching H x W maps");
  }
}

}  // namespace

ConsistencyResult CheckConsistency(const DepthView& ref, std::span<const DepthView> sources,
                                   const FilterParams& params) {
  params.Validate();
  if (sources.empty()) throw std::invalid_argument("consistency check needs source views");
  CheckShapes(ref);
  for (const auto& s : sources) CheckShapes(s);
  const int h = ref.depth.dim(0);
  const int w = ref.depth.dim(1);
  ConsistencyResult out{Tensor({h, w}), Tensor({h, w})};
  std::vector<SourceCheck> checks(sources.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float d = ref.depth.at(y, x);
      if (!(d > 0.0f) || ref.confidence.at(y, x) < params.prob_threshold) continue;
      const Eigen::Vector2d pixel(x + 0.5, y + 0.5);
      int support = 0;
      for (size_t s = 0; s < sources.size(); ++s) {
        checks[s] = CheckAgainst(ref, pixel, d, sources[s], params.disparity_threshold);
        support += Passes(checks[s], params.reproj_threshold_px, params.disparity_threshold);
      }
      out.support_count.at(y, x) = static_cast<float>(support);
      out.mask.at(y, x) = Decide(checks, params).pass ? 1.0f : 0.0f;
    }
  }
  return out;
}

PointCloud FuseToCloud(std::span<const DepthView> views, const FilterParams& params) {
  params.Validate();
  if (views.size() < 2) throw std::invalid_argument("fusion needs at least two views");
  for (const auto& v : views) CheckShapes(v);

  std::vector<std::vector<char>> consumed(views.size());
  for (size_t v = 0; v < views.size(); ++v) consumed[v].assign(views[v].depth.size(), 0);

  PointCloud cloud;
  std::vector<SourceCheck> checks(views.size() - 1);
  std::vector<size_t> src_index(views.size() - 1);
  for (size_t r = 0; r < views.size(); ++r) {
    const DepthView& ref = views[r];
    const int h = ref.depth.dim(0);
    const int w = ref.depth.dim(1);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const size_t pix = static_cast<size_t>(y) * w + x;
        if (consumed[r][pix]) continue;
        const float d = ref.depth[pix];
        if (!(d > 0.0f) || ref.confidence[pix] < params.prob_threshold) continue;
        const Eigen::Vector2d pixel(x + 0.5, y + 0.5);
        size_t k = 0;
        for (size_t s = 0; s < views.size(); ++s) {
          if (s == r) continue;
          src_index[k] = s;
          checks[k++] = CheckAgainst(ref, pixel, d, views[s], params.disparity_threshold);
        }
        const Verdict verdict = Decide(checks, params);
        if (!verdict.pass) continue;

        Eigen::Vector3d sum = Unproject(ref.camera, pixel, d);
        int count = 1;
        for (size_t c = 0; c < checks.size(); ++c) {
          if (!Passes(checks[c], verdict.scale * params.reproj_threshold_px,
                      verdict.scale * params.disparity_threshold)) {
            continue;
          }
          sum += checks[c].point;
          ++count;
          const auto& src = views[src_index[c]];
          consumed[src_index[c]][static_cast<size_t>(checks[c].src_y) * src.depth.dim(1) +
                                 checks[c].src_x] = 1;
        }
        consumed[r][pix] = 1;
        cloud.points.push_back((sum / count).cast<float>());
        std::array<uint8_t, 3> color = {255, 255, 255};
        if (!ref.camera.image.empty() && ref.camera.image.dim(0) == h &&
            ref.camera.image.dim(1) == w) {
          for (int ch = 0; ch < 3; ++ch) {
            const float c = std::clamp(ref.camera.image.at(y, x, ch), 0.0f, 1.0f);
            color[ch] = static_cast<uint8_t>(std::lround(c * 255.0f));
          }
        }
        cloud.colors.push_back(color);
      }
    }
  }
  return cloud;
}

}  // namespace mvsweep
