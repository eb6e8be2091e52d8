#include "mvsweep/cost_volume.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mvsweep {

CostVolume GroupwiseCorrelation(const Tensor& ref_feat, const WarpedFeature& warped, int groups) {
  const Tensor& src = warped.data;
  if (ref_feat.ndim() != 3 || src.ndim() != 4 || ref_feat.dim(0) != src.dim(0) ||
      ref_feat.dim(1) != src.dim(2) || ref_feat.dim(2) != src.dim(3)) {
    throw std::invalid_argument("reference features " + ref_feat.ShapeString() +
                                " do not match warped features " + src.ShapeString());
  }
  const int channels = ref_feat.dim(0);
  if (groups <= 0 || channels % groups != 0) {
    throw std::invalid_argument(std::to_string(channels) + " channels cannot form " +
                                std::to_string(groups) + " groups");
  }
  const int per_group = channels / groups;
  const int num = src.dim(1);
  const int h = src.dim(2);
  const int w = src.dim(3);
  const size_t plane = static_cast<size_t>(h) * w;

  CostVolume vol{Tensor({groups, num, h, w}), warped.validity};
  for (int g = 0; g < groups; ++g) {
    for (int j = 0; j < num; ++j) {
      float* out = vol.data.raw() + (static_cast<size_t>(g) * num + j) * plane;
      for (int c = g * per_group; c < (g + 1) * per_group; ++c) {
        const float* r = ref_feat.raw() + c * plane;
        const float* s = src.raw() + (static_cast<size_t>(c) * num + j) * plane;
        for (size_t i = 0; i < plane; ++i) out[i] += r[i] * s[i];
      }
      const float* valid = warped.validity.raw() + j * plane;
      for (size_t i = 0; i < plane; ++i) {
        if (valid[i] == 0.0f) out[i] = 0.0f;
      }
    }
  }
  return vol;
}

Tensor GroupMean(const CostVolume& vol) {
  const int groups = vol.groups();
  const size_t count = static_cast<size_t>(vol.num()) * vol.height() * vol.width();
  Tensor out({vol.num(), vol.height(), vol.width()});
  const float inv = 1.0f / static_cast<float>(groups);
  for (int g = 0; g < groups; ++g) {
    const float* p = vol.data.raw() + g * count;
    for (size_t i = 0; i < count; ++i) out[i] += p[i];
  }
  for (size_t i = 0; i < count; ++i) out[i] *= inv;
  return out;
}

Tensor VisibilityWeight(const CostVolume& vol, float gain) {
  const int num = vol.num();
  if (num < 2) throw std::invalid_argument("visibility needs at least two hypotheses");
  const Tensor mean = GroupMean(vol);
  const size_t plane = static_cast<size_t>(vol.height()) * vol.width();
  const double log_d = std::log(static_cast<double>(num));
  Tensor out({vol.height(), vol.width()}, kVisibilityFloor);
  std::vector<double> logits(num);
  for (size_t i = 0; i < plane; ++i) {
    double max_logit = -std::numeric_limits<double>::infinity();
    int valid = 0;
    for (int j = 0; j < num; ++j) {
      if (vol.validity[j * plane + i] == 0.0f) continue;
      ++valid;
      logits[j] = static_cast<double>(gain) * mean[j * plane + i];
      max_logit = std::max(max_logit, logits[j]);
    }
    if (valid == 0) continue;
    double sum = 0.0;
    for (int j = 0; j < num; ++j) {
      if (vol.validity[j * plane + i] != 0.0f) sum += std::exp(logits[j] - max_logit);
    }
    double entropy = 0.0;
    for (int j = 0; j < num; ++j) {
      if (vol.validity[j * plane + i] == 0.0f) continue;
      const double p = std::exp(logits[j] - max_logit) / sum;
      if (p > 0.0) entropy -= p * std::log(p);
    }
    const double weight = 1.0 - entropy / log_d;
    out[i] = static_cast<float>(std::clamp(weight, static_cast<double>(kVisibilityFloor), 1.0));
  }
  return out;
}

CostVolume FuseVolumes(std::span<const CostVolume> volumes, std::span<const Tensor> weights) {
  if (volumes.empty()) throw std::invalid_argument("cannot fuse an empty list of volumes");
  if (volumes.size() != weights.size()) {
    throw std::invalid_argument("fusion needs one visibility map per volume");
  }
  const auto& shape = volumes[0].data.shape();
  for (size_t v = 0; v < volumes.size(); ++v) {
    if (volumes[v].data.shape() != shape ||
        volumes[v].validity.shape() != volumes[0].validity.shape() ||
        weights[v].ndim() != 2 || weights[v].dim(0) != shape[2] || weights[v].dim(1) != shape[3]) {
      throw std::invalid_argument("fused volumes and weights must share one shape");
    }
  }
  const int groups = shape[0];
  const int num = shape[1];
  const size_t plane = static_cast<size_t>(shape[2]) * shape[3];

  CostVolume out{Tensor(shape), Tensor(volumes[0].validity.shape())};
  for (int j = 0; j < num; ++j) {
    for (size_t i = 0; i < plane; ++i) {
      const size_t vi = j * plane + i;
      float den = 0.0f;
      int contributors = 0;
      size_t last = 0;
      for (size_t v = 0; v < volumes.size(); ++v) {
        if (volumes[v].validity[vi] == 0.0f) continue;
        den += weights[v][i];
        ++contributors;
        last = v;
      }
      for (int g = 0; g < groups; ++g) {
        const size_t di = (static_cast<size_t>(g) * num + j) * plane + i;
        if (contributors == 0) {
          out.data[di] = -1.0f;
        } else if (contributors == 1) {
          out.data[di] = volumes[last].data[di];
        } else {
          float num_sum = 0.0f;
          for (size_t v = 0; v < volumes.size(); ++v) {
            if (volumes[v].validity[vi] != 0.0f) num_sum += weights[v][i] * volumes[v].data[di];
          }
          out.data[di] = num_sum / den;
        }
      }
      out.validity[vi] = contributors > 0 ? 1.0f : 0.0f;
    }
  }
  return out;
}

std::vector<float> GaussianKernel(double sigma, int radius) {
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  std::vector<float> out(k.size());
  for (size_t i = 0; i < k.size(); ++i) out[i] = static_cast<float>(k[i] / sum);
  return out;
}

namespace {

// Smooths along one axis of a D x H x W volume viewed as
// [outer][axis][inner]. Written as center + sum k_i (x_i - center) so that
// constant signals pass through unchanged bit for bit.
void SmoothAxis(Tensor& vol, int outer, int axis_len, int inner, const std::vector<float>& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  std::vector<float> line(axis_len);
  for (int o = 0; o < outer; ++o) {
    for (int in = 0; in < inner; ++in) {
      float* base = vol.raw() + static_cast<size_t>(o) * axis_len * inner + in;
      for (int a = 0; a < axis_len; ++a) line[a] = base[static_cast<size_t>(a) * inner];
      for (int a = 0; a < axis_len; ++a) {
        const float center = line[a];
        float acc = 0.0f;
        for (int k = -radius; k <= radius; ++k) {
          if (k == 0) continue;
          const int idx = std::clamp(a + k, 0, axis_len - 1);
          acc += kernel[k + radius] * (line[idx] - center);
        }
        base[static_cast<size_t>(a) * inner] = center + acc;
      }
    }
  }
}

}  // namespace

Tensor Regularize(const CostVolume& vol, const RegularizeOptions& options) {
  Tensor out = GroupMean(vol);
  const int num = out.dim(0);
  const int h = out.dim(1);
  const int w = out.dim(2);
  const auto kd = GaussianKernel(options.sigma_depth, options.radius);
  const auto ks = GaussianKernel(options.sigma_spatial, options.radius);
  SmoothAxis(out, 1, num, h * w, kd);
  SmoothAxis(out, num, h, w, ks);
  SmoothAxis(out, num * h, w, 1, ks);
  return out;
}

}  // namespace mvsweep
