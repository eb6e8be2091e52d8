#pragma once

#include <span>

#include "mvsweep/geometry.h"
#include "mvsweep/tensor.h"

namespace mvsweep {

inline constexpr float kVisibilityFloor = 1e-3f;

struct CostVolume {
  Tensor data;      // G x D x H x W
  Tensor validity;  // D x H x W in {0, 1}

  int groups() const { return data.dim(0); }
  int num() const { return data.dim(1); }
  int height() const { return data.dim(2); }
  int width() const { return data.dim(3); }
};

// Inner product of each channel group of ref and warped. With
// group-normalized inputs this is the per-group cosine similarity in [-1, 1].
// Entries with validity 0 are 0.
CostVolume GroupwiseCorrelation(const Tensor& ref_feat, const WarpedFeature& warped, int groups);

// D x H x W mean over groups.
Tensor GroupMean(const CostVolume& vol);

// Per pixel: softmax over the valid hypotheses of gain * group-mean
// correlation, entropy H, weight = clamp(1 - H / ln D, 1e-3, 1). Pixels with
// no valid hypothesis get the floor.
Tensor VisibilityWeight(const CostVolume& vol, float gain = 1.0f);

// Visibility-weighted mean over source views. A view contributes to an entry
// only where its validity is 1; entries no view covers are -1 and invalid.
CostVolume FuseVolumes(std::span<const CostVolume> volumes, std::span<const Tensor> weights);

struct RegularizeOptions {
  double sigma_depth = 1.0;    // in hypothesis steps
  double sigma_spatial = 1.0;  // in pixels
  int radius = 2;
};

// Normalized, truncated 1-D Gaussian of length 2 * radius + 1.
std::vector<float> GaussianKernel(double sigma, int radius);

// Group mean followed by separable Gaussian smoothing along D, H and W with
// edge replication. Returns D x H x W.
Tensor Regularize(const CostVolume& vol, const RegularizeOptions& options = {});

}  // namespace mvsweep
