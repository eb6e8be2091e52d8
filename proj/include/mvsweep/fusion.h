#pragma once

#include <span>
#include <vector>

#include "mvsweep/geometry.h"
#include "mvsweep/io.h"
#include "mvsweep/tensor.h"

namespace mvsweep {

enum class FilterMode { kStatic, kDynamic };

struct FilterParams {
  double disparity_threshold = 0.1;  // relative depth tolerance
  int num_consistent = 2;
  double prob_threshold = 0.5;
  double reproj_threshold_px = 1.0;
  FilterMode mode = FilterMode::kStatic;

  void Validate() const;
};

// One view's estimate: full-resolution depth (0 = invalid), confidence and
// camera. The camera image, when present, supplies point colors.
struct DepthView {
  Tensor depth;
  Tensor confidence;
  CameraView camera;
};

struct ConsistencyResult {
  Tensor mask;           // H x W in {0, 1}
  Tensor support_count;  // H x W, sources passing the base thresholds
};

// Round-trip check of every reference pixel against each source view.
ConsistencyResult CheckConsistency(const DepthView& ref, std::span<const DepthView> sources,
                                   const FilterParams& params);

// Geometric filtering of every view in order followed by point averaging
// over the supporting views; a pixel that has contributed to a point never
// seeds another one.
PointCloud FuseToCloud(std::span<const DepthView> views, const FilterParams& params);

}  // namespace mvsweep
