#include "mvsweep/features.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mvsweep/io.h"
#include "mvsweep/random.h"

namespace mvsweep {

namespace {

Tensor Grayscale(const Tensor& image) {
  const int h = image.dim(0);
  const int w = image.dim(1);
  Tensor gray({h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      gray.at(y, x) = 0.299f * image.at(y, x, 0) + 0.587f * image.at(y, x, 1) +
                      0.114f * image.at(y, x, 2);
    }
  }
  return gray;
}

Tensor AreaDownsample(const Tensor& gray, int factor) {
  if (factor == 1) return gray;
  const int h = gray.dim(0) / factor;
  const int w = gray.dim(1) / factor;
  Tensor out({h, w});
  const float norm = 1.0f / static_cast<float>(factor * factor);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float sum = 0.0f;
      for (int dy = 0; dy < factor; ++dy) {
        for (int dx = 0; dx < factor; ++dx) sum += gray.at(y * factor + dy, x * factor + dx);
      }
      out.at(y, x) = sum * norm;
    }
  }
  return out;
}

Tensor LevelFeatures(const Tensor& g) {
  const int h = g.dim(0);
  const int w = g.dim(1);
  auto px = [&](int y, int x) {
    return g.at(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1));
  };
  Tensor f({kPyramidChannels, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float c = px(y, x);
      float smooth = 0.0f;
      static constexpr float k[3] = {0.25f, 0.5f, 0.25f};
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) smooth += k[dy + 1] * k[dx + 1] * px(y + dy, x + dx);
      }
      const float l = px(y, x - 1), r = px(y, x + 1);
      const float u = px(y - 1, x), d = px(y + 1, x);
      const float xx = l - 2.0f * c + r;
      const float yy = u - 2.0f * c + d;
      f.at(0, y, x) = c;
      f.at(1, y, x) = smooth;
      f.at(2, y, x) = 0.5f * (r - l);
      f.at(3, y, x) = 0.5f * (d - u);
      f.at(4, y, x) = xx;
      f.at(5, y, x) = yy;
      f.at(6, y, x) = 0.25f * (px(y + 1, x + 1) - px(y - 1, x + 1) - px(y + 1, x - 1) +
                               px(y - 1, x - 1));
      f.at(7, y, x) = xx + yy;
    }
  }
  const size_t plane = static_cast<size_t>(h) * w;
  for (int ch = 0; ch < kPyramidChannels; ++ch) {
    float* p = f.raw() + ch * plane;
    double mean = 0.0;
    for (size_t i = 0; i < plane; ++i) mean += p[i];
    mean /= static_cast<double>(plane);
    double var = 0.0;
    for (size_t i = 0; i < plane; ++i) var += (p[i] - mean) * (p[i] - mean);
    var /= static_cast<double>(plane);
    const double inv_std = 1.0 / std::sqrt(std::max(var, 1e-8));
    for (size_t i = 0; i < plane; ++i) p[i] = static_cast<float>((p[i] - mean) * inv_std);
  }
  return f;
}

}  // namespace

FeaturePyramid BuildPyramid(const Tensor& image) {
  if (image.ndim() != 3 || image.dim(2) != 3) {
    throw std::invalid_argument("pyramid input must be H x W x 3, got " + image.ShapeString());
  }
  if (image.dim(0) % 8 != 0 || image.dim(1) % 8 != 0) {
    throw std::invalid_argument("pyramid input dims must be divisible by 8, got " +
                                image.ShapeString());
  }
  const Tensor gray = Grayscale(image);
  FeaturePyramid pyr;
  for (int l = 0; l < kNumLevels; ++l) {
    pyr.levels[l] = LevelFeatures(AreaDownsample(gray, 1 << (kNumLevels - 1 - l)));
  }
  return pyr;
}

Tensor PadToMultiple(const Tensor& image, int multiple) {
  const int h = image.dim(0);
  const int w = image.dim(1);
  const int c = image.dim(2);
  const int ph = (h + multiple - 1) / multiple * multiple;
  const int pw = (w + multiple - 1) / multiple * multiple;
  if (ph == h && pw == w) return image;
  Tensor out({ph, pw, c});
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) {
      for (int k = 0; k < c; ++k) out.at(y, x, k) = image.at(std::min(y, h - 1), std::min(x, w - 1), k);
    }
  }
  return out;
}

void VitFeatures::Validate() const {
  if (feat.ndim() != 3 || attn.ndim() != 3 || attn_mean.ndim() != 3 || attn_mean.dim(0) != 1) {
    throw std::invalid_argument("ViT tensors must be C x h x w with a single-channel mean");
  }
  const int h = feat.dim(1);
  const int w = feat.dim(2);
  if (attn.dim(1) != h || attn.dim(2) != w || attn_mean.dim(1) != h || attn_mean.dim(2) != w) {
    throw std::invalid_argument("ViT feature and attention grids differ: " + feat.ShapeString() +
                                " vs " + attn.ShapeString() + " vs " + attn_mean.ShapeString());
  }
  const int heads = attn.dim(0);
  const size_t plane = static_cast<size_t>(h) * w;
  for (size_t i = 0; i < plane; ++i) {
    double sum = 0.0;
    for (int k = 0; k < heads; ++k) {
      const float a = attn[k * plane + i];
      if (!(a >= 0.0f)) throw std::invalid_argument("negative or NaN attention value");
      sum += a;
    }
    if (std::abs(sum / heads - attn_mean[i]) > 1e-6) {
      throw std::invalid_argument("attn_mean is not the mean over attention heads");
    }
  }
}

VitFeatures LoadVitFeatures(const std::filesystem::path& feat, const std::filesystem::path& attn,
                            const std::filesystem::path& attn_mean) {
  VitFeatures v{ReadTensorFile(feat), ReadTensorFile(attn), ReadTensorFile(attn_mean)};
  v.Validate();
  return v;
}

void GluWeights::Validate() const {
  const auto cp = left_w.rows();
  if (cp == 0 || right_w.rows() != cp || left_b.size() != cp || right_b.size() != cp ||
      left_w.cols() <= right_w.cols() || out_w.cols() != cp || out_w.rows() == 0) {
    throw std::invalid_argument("GLU weight shapes are inconsistent");
  }
  if (!left_w.allFinite() || !left_b.allFinite() || !right_w.allFinite() ||
      !right_b.allFinite() || !out_w.allFinite()) {
    throw std::invalid_argument("GLU weights hold non-finite values");
  }
}

GluWeights GluWeights::FromSeed(uint64_t seed, int vit_channels, int heads, int reduced_channels,
                                int out_channels) {
  Xorshift64Star rng(seed);
  auto fill = [&rng](auto& m, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = static_cast<float>(rng.Uniform(-bound, bound));
      }
    }
  };
  GluWeights w;
  w.left_w.resize(reduced_channels, vit_channels + heads);
  w.left_b.resize(reduced_channels);
  w.right_w.resize(reduced_channels, vit_channels);
  w.right_b.resize(reduced_channels);
  w.out_w.resize(out_channels, reduced_channels);
  fill(w.left_w, vit_channels + heads);
  fill(w.left_b, vit_channels + heads);
  fill(w.right_w, vit_channels);
  fill(w.right_b, vit_channels);
  fill(w.out_w, reduced_channels);
  w.Validate();
  return w;
}

void WriteGluWeights(const GluWeights& w, const std::filesystem::path& path) {
  w.Validate();
  std::vector<float> flat = {static_cast<float>(w.vit_channels()), static_cast<float>(w.heads()),
                             static_cast<float>(w.reduced_channels()),
                             static_cast<float>(w.out_channels())};
  auto append = [&flat](const auto& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    }
  };
  append(w.left_w);
  append(w.left_b);
  append(w.right_w);
  append(w.right_b);
  append(w.out_w);
  const int n = static_cast<int>(flat.size());
  WriteTensorFile(Tensor({n}, std::move(flat)), path);
}

GluWeights ReadGluWeights(const std::filesystem::path& path) {
  const Tensor t = ReadTensorFile(path);
  if (t.ndim() != 1 || t.size() < 4) {
    throw IoError(IoErrc::kMalformedHeader, "GLU weight file must be a 1-D tensor");
  }
  const int cv = static_cast<int>(t[0]);
  const int heads = static_cast<int>(t[1]);
  const int cp = static_cast<int>(t[2]);
  const int c = static_cast<int>(t[3]);
  if (cv <= 0 || heads <= 0 || cp <= 0 || c <= 0) {
    throw IoError(IoErrc::kMalformedHeader, "GLU weight file dimensions");
  }
  const size_t expected = 4 + static_cast<size_t>(cp) * (cv + heads) + cp +
                          static_cast<size_t>(cp) * cv + cp + static_cast<size_t>(c) * cp;
  if (t.size() != expected) {
    throw IoError(IoErrc::kTruncated, "GLU weight file holds " + std::to_string(t.size()) +
                                          " values, expected " + std::to_string(expected));
  }
  GluWeights w;
  w.left_w.resize(cp, cv + heads);
  w.left_b.resize(cp);
  w.right_w.resize(cp, cv);
  w.right_b.resize(cp);
  w.out_w.resize(c, cp);
  size_t pos = 4;
  auto take = [&](auto& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index col = 0; col < m.cols(); ++col) m(r, col) = t[pos++];
    }
  };
  take(w.left_w);
  take(w.left_b);
  take(w.right_w);
  take(w.right_b);
  take(w.out_w);
  w.Validate();
  return w;
}

Tensor GluFuse(const VitFeatures& vit, const GluWeights& w) {
  const int cv = vit.feat.dim(0);
  const int heads = vit.attn.dim(0);
  if (cv != w.vit_channels() || heads != w.heads()) {
    throw std::invalid_argument("GLU expects " + std::to_string(w.vit_channels()) + "+" +
                                std::to_string(w.heads()) + " input channels, got " +
                                std::to_string(cv) + "+" + std::to_string(heads));
  }
  const int h = vit.feat.dim(1);
  const int wd = vit.feat.dim(2);
  if (vit.attn.dim(1) != h || vit.attn.dim(2) != wd || vit.attn_mean.dim(1) != h ||
      vit.attn_mean.dim(2) != wd) {
    throw std::invalid_argument("ViT feature and attention grids differ");
  }
  const int cp = w.reduced_channels();
  const size_t plane = static_cast<size_t>(h) * wd;
  Tensor out({cp, h, wd});
  Eigen::VectorXf left_in(cv + heads);
  Eigen::VectorXf right_in(cv);
  for (size_t i = 0; i < plane; ++i) {
    const float mean_attn = vit.attn_mean[i];
    for (int c = 0; c < cv; ++c) {
      left_in[c] = vit.feat[c * plane + i];
      right_in[c] = vit.feat[c * plane + i] * mean_attn;
    }
    for (int k = 0; k < heads; ++k) left_in[cv + k] = vit.attn[k * plane + i];
    const Eigen::VectorXf left = w.left_w * left_in + w.left_b;
    const Eigen::VectorXf right = w.right_w * right_in + w.right_b;
    for (int c = 0; c < cp; ++c) out[c * plane + i] = Swish(left[c]) * Swish(right[c]);
  }
  return out;
}

Tensor ResizeBilinear(const Tensor& feat, int height, int width) {
  const int channels = feat.dim(0);
  const int h = feat.dim(1);
  const int w = feat.dim(2);
  Tensor out({channels, height, width});
  const double sy_scale = static_cast<double>(h) / height;
  const double sx_scale = static_cast<double>(w) / width;
  for (int y = 0; y < height; ++y) {
    const double sy = std::clamp((y + 0.5) * sy_scale - 0.5, 0.0, static_cast<double>(h - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, h - 1);
    const float fy = static_cast<float>(sy - y0);
    for (int x = 0; x < width; ++x) {
      const double sx = std::clamp((x + 0.5) * sx_scale - 0.5, 0.0, static_cast<double>(w - 1));
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, w - 1);
      const float fx = static_cast<float>(sx - x0);
      for (int c = 0; c < channels; ++c) {
        const float top = (1.0f - fx) * feat.at(c, y0, x0) + fx * feat.at(c, y0, x1);
        const float bottom = (1.0f - fx) * feat.at(c, y1, x0) + fx * feat.at(c, y1, x1);
        out.at(c, y, x) = (1.0f - fy) * top + fy * bottom;
      }
    }
  }
  return out;
}

FeaturePyramid InjectVit(const FeaturePyramid& pyramid, const Tensor& fused, const GluWeights& w) {
  const Tensor& coarse = pyramid.levels[0];
  if (fused.ndim() != 3 || fused.dim(0) != w.reduced_channels() ||
      fused.dim(1) * 4 != coarse.dim(1) || fused.dim(2) * 4 != coarse.dim(2)) {
    throw std::invalid_argument("fused ViT map " + fused.ShapeString() +
                                " does not match coarsest level " + coarse.ShapeString());
  }
  if (w.out_channels() != coarse.dim(0)) {
    throw std::invalid_argument("ViT projection has " + std::to_string(w.out_channels()) +
                                " outputs for a " + std::to_string(coarse.dim(0)) +
                                "-channel pyramid");
  }
  const int cp = fused.dim(0);
  const int h = fused.dim(1);
  const int wd = fused.dim(2);
  const size_t plane = static_cast<size_t>(h) * wd;
  Tensor projected({w.out_channels(), h, wd});
  for (size_t i = 0; i < plane; ++i) {
    for (int o = 0; o < w.out_channels(); ++o) {
      float acc = 0.0f;
      for (int c = 0; c < cp; ++c) acc += w.out_w(o, c) * fused[c * plane + i];
      projected[o * plane + i] = acc;
    }
  }
  const Tensor up = ResizeBilinear(projected, coarse.dim(1), coarse.dim(2));
  FeaturePyramid out = pyramid;
  for (size_t i = 0; i < up.size(); ++i) out.levels[0][i] += up[i];
  return out;
}

Tensor GroupNormalize(const Tensor& feat, int groups) {
  if (feat.ndim() < 3 || groups <= 0 || feat.dim(0) % groups != 0) {
    throw std::invalid_argument("cannot split " + feat.ShapeString() + " into " +
                                std::to_string(groups) + " channel groups");
  }
  const int per_group = feat.dim(0) / groups;
  const size_t plane = feat.size() / feat.dim(0);
  Tensor out = feat;
  for (int g = 0; g < groups; ++g) {
    for (size_t i = 0; i < plane; ++i) {
      double sq = 0.0;
      for (int c = 0; c < per_group; ++c) {
        const double v = feat[(g * per_group + c) * plane + i];
        sq += v * v;
      }
      const double norm = std::sqrt(sq);
      const float scale = norm < 1e-8 ? 0.0f : static_cast<float>(1.0 / norm);
      for (int c = 0; c < per_group; ++c) out[(g * per_group + c) * plane + i] *= scale;
    }
  }
  return out;
}

}  // namespace mvsweep
