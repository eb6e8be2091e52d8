#pragma once

#include <array>
#include <functional>
#include <limits>
#include <vector>

#include "mvsweep/cost_volume.h"
#include "mvsweep/geometry.h"
#include "mvsweep/tensor.h"

namespace mvsweep {

inline constexpr float kInfiniteTemperature = std::numeric_limits<float>::infinity();

// softmax(logits * t) along D of a D x H x W volume. t = infinity yields a
// one-hot column at the maximum, ties going to the smallest index.
// Throws std::invalid_argument for t <= 0 or NaN.
Tensor ProbabilityVolume(const Tensor& logits, float temperature);

// sum_j d_j p_j per pixel.
Tensor ExpectationDepth(const Tensor& prob, const DepthHypotheses& hyp);

// Depth of the most probable hypothesis; ties go to the smallest index.
Tensor ArgmaxDepth(const Tensor& prob, const DepthHypotheses& hyp);

// Plain soft-argmin regression: sum_j d_j softmax(logits)_j.
Tensor RegressionDepth(const Tensor& logits, const DepthHypotheses& hyp);

// Per-pixel maximum over D.
Tensor MaxProbability(const Tensor& prob);

// Winner-take-all depth of the unregularized group-mean correlation.
Tensor WtaDiagnostic(const CostVolume& vol, const DepthHypotheses& hyp);

struct CascadeConfig {
  std::array<int, 4> hypotheses = {32, 16, 8, 4};
  std::array<float, 4> temperatures = {5.0f, 2.5f, 1.5f, 1.0f};
  double d_min = 0.0;
  double d_max = 0.0;
  int height = 0;  // full resolution, divisible by 8
  int width = 0;
};

struct StageResult {
  DepthHypotheses hyp;
  Tensor depth;
  Tensor confidence;  // max probability at this stage's temperature
};

struct InferenceResult {
  std::vector<StageResult> stages;
  Tensor depth;       // final stage, full resolution
  Tensor confidence;  // final-stage max probability
};

// Produces the regularized logit volume (D x H_l x W_l) of stage 1..4 for the
// given hypotheses.
using StageVolumeFn = std::function<Tensor(int stage, const DepthHypotheses& hyp)>;

// Coarse-to-fine cascade: stage l resolution is full / 2^(4-l). Stage 1 uses
// uniform inverse-depth hypotheses; later stages refine around the
// nearest-neighbor upsampled previous depth.
InferenceResult StagedInference(const StageVolumeFn& volume_fn, const CascadeConfig& config);

}  // namespace mvsweep
