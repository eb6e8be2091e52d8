#include "mvsweep/depth_inference.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mvsweep {

namespace {

void CheckVolume(const Tensor& vol, const DepthHypotheses& hyp) {
  if (vol.ndim() != 3 || vol.shape() != hyp.values.shape()) {
    throw std::invalid_argument("volume " + vol.ShapeString() + " does not match hypotheses " +
                                hyp.values.ShapeString());
  }
}

}  // namespace

Tensor ProbabilityVolume(const Tensor& logits, float temperature) {
  if (!(temperature > 0.0f)) {
    throw std::invalid_argument("temperature must be positive, got " + std::to_string(temperature));
  }
  if (logits.ndim() != 3) throw std::invalid_argument("probability volume expects D x H x W");
  const int num = logits.dim(0);
  const size_t plane = static_cast<size_t>(logits.dim(1)) * logits.dim(2);
  Tensor prob(logits.shape());
  const bool one_hot = std::isinf(temperature);
  std::vector<float> scaled(num);
  for (size_t i = 0; i < plane; ++i) {
    if (one_hot) {
      int best = 0;
      for (int j = 1; j < num; ++j) {
        if (logits[j * plane + i] > logits[best * plane + i]) best = j;
      }
      prob[best * plane + i] = 1.0f;
      continue;
    }
    float max_v = -std::numeric_limits<float>::infinity();
    for (int j = 0; j < num; ++j) {
      scaled[j] = logits[j * plane + i] * temperature;
      max_v = std::max(max_v, scaled[j]);
    }
    float sum = 0.0f;
    for (int j = 0; j < num; ++j) {
      scaled[j] = std::exp(scaled[j] - max_v);
      sum += scaled[j];
    }
    for (int j = 0; j < num; ++j) prob[j * plane + i] = scaled[j] / sum;
  }
  return prob;
}

Tensor ExpectationDepth(const Tensor& prob, const DepthHypotheses& hyp) {
  CheckVolume(prob, hyp);
  const int num = prob.dim(0);
  const size_t plane = static_cast<size_t>(prob.dim(1)) * prob.dim(2);
  Tensor depth({prob.dim(1), prob.dim(2)});
  for (size_t i = 0; i < plane; ++i) {
    float acc = 0.0f;
    for (int j = 0; j < num; ++j) acc += hyp.values[j * plane + i] * prob[j * plane + i];
    depth[i] = acc;
  }
  return depth;
}

Tensor ArgmaxDepth(const Tensor& prob, const DepthHypotheses& hyp) {
  CheckVolume(prob, hyp);
  const int num = prob.dim(0);
  const size_t plane = static_cast<size_t>(prob.dim(1)) * prob.dim(2);
  Tensor depth({prob.dim(1), prob.dim(2)});
  for (size_t i = 0; i < plane; ++i) {
    int best = 0;
    for (int j = 1; j < num; ++j) {
      if (prob[j * plane + i] > prob[best * plane + i]) best = j;
    }
    depth[i] = hyp.values[best * plane + i];
  }
  return depth;
}

Tensor RegressionDepth(const Tensor& logits, const DepthHypotheses& hyp) {
  CheckVolume(logits, hyp);
  const int num = logits.dim(0);
  const size_t plane = static_cast<size_t>(logits.dim(1)) * logits.dim(2);
  Tensor depth({logits.dim(1), logits.dim(2)});
  std::vector<float> e(num);
  for (size_t i = 0; i < plane; ++i) {
    float max_v = -std::numeric_limits<float>::infinity();
    for (int j = 0; j < num; ++j) max_v = std::max(max_v, logits[j * plane + i]);
    float sum = 0.0f;
    for (int j = 0; j < num; ++j) {
      e[j] = std::exp(logits[j * plane + i] - max_v);
      sum += e[j];
    }
    float acc = 0.0f;
    for (int j = 0; j < num; ++j) acc += hyp.values[j * plane + i] * (e[j] / sum);
    depth[i] = acc;
  }
  return depth;
}

Tensor MaxProbability(const Tensor& prob) {
  const int num = prob.dim(0);
  const size_t plane = static_cast<size_t>(prob.dim(1)) * prob.dim(2);
  Tensor out({prob.dim(1), prob.dim(2)});
  for (size_t i = 0; i < plane; ++i) {
    float best = prob[i];
    for (int j = 1; j < num; ++j) best = std::max(best, prob[j * plane + i]);
    out[i] = best;
  }
  return out;
}

Tensor WtaDiagnostic(const CostVolume& vol, const DepthHypotheses& hyp) {
  const Tensor mean = GroupMean(vol);
  CheckVolume(mean, hyp);
  const int num = mean.dim(0);
  const size_t plane = static_cast<size_t>(mean.dim(1)) * mean.dim(2);
  Tensor depth({mean.dim(1), mean.dim(2)});
  for (size_t i = 0; i < plane; ++i) {
    int best = 0;
    for (int j = 1; j < num; ++j) {
      if (mean[j * plane + i] > mean[best * plane + i]) best = j;
    }
    depth[i] = hyp.values[best * plane + i];
  }
  return depth;
}

InferenceResult StagedInference(const StageVolumeFn& volume_fn, const CascadeConfig& config) {
  if (config.height <= 0 || config.width <= 0 || config.height % 8 != 0 || config.width % 8 != 0) {
    throw std::invalid_argument("cascade resolution must be positive and divisible by 8");
  }
  InferenceResult result;
  double base_interval = 0.0;
  for (int stage = 1; stage <= 4; ++stage) {
    const int scale = 1 << (4 - stage);
    const int h = config.height / scale;
    const int w = config.width / scale;
    const int num = config.hypotheses[stage - 1];
    DepthHypotheses hyp;
    if (stage == 1) {
      hyp = InitHypotheses(config.d_min, config.d_max, num, h, w);
      base_interval = hyp.interval;
    } else {
      const Tensor prev = UpsampleDepth(result.stages.back().depth, 2);
      hyp = RefineHypotheses(prev, stage, base_interval, num, config.d_min, config.d_max);
    }
    const Tensor logits = volume_fn(stage, hyp);
    const Tensor prob = ProbabilityVolume(logits, config.temperatures[stage - 1]);
    StageResult sr;
    sr.depth = ExpectationDepth(prob, hyp);
    sr.confidence = MaxProbability(prob);
    sr.hyp = std::move(hyp);
    result.stages.push_back(std::move(sr));
  }
  result.depth = result.stages.back().depth;
  result.confidence = result.stages.back().confidence;
  return result;
}

}  // namespace mvsweep
