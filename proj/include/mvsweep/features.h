#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>

#include <Eigen/Core>

#include "mvsweep/tensor.h"

namespace mvsweep {

inline constexpr int kNumLevels = 4;
inline constexpr int kPyramidChannels = 8;

// Level 0 is the coarsest (H/8 x W/8), level 3 full resolution.
struct FeaturePyramid {
  std::array<Tensor, kNumLevels> levels;  // each C x H_l x W_l
};

// Handcrafted 8-channel pyramid: intensity, 3x3 Gaussian intensity, x and y
// central differences, xx / yy / xy second differences and the Laplacian,
// computed on the area-downsampled grayscale image of each level and
// standardized per channel. H and W must be divisible by 8.
FeaturePyramid BuildPyramid(const Tensor& image);

// Appends edge-replicated rows/columns so both dimensions are multiples of
// `multiple`.
Tensor PadToMultiple(const Tensor& image, int multiple);

struct VitFeatures {
  Tensor feat;       // C_v x h' x w'
  Tensor attn;       // heads x h' x w'
  Tensor attn_mean;  // 1 x h' x w'

  // Throws std::invalid_argument on inconsistent shapes, negative attention
  // or an attn_mean that is not the head mean to 1e-6.
  void Validate() const;
};

VitFeatures LoadVitFeatures(const std::filesystem::path& feat,
                            const std::filesystem::path& attn,
                            const std::filesystem::path& attn_mean);

// Gated linear reduction of ViT tokens. Both branches are 1x1 linear maps with bias;
// the output projection is a bias-free 1x1 map to the pyramid channels.
struct GluWeights {
  Eigen::MatrixXf left_w;   // C_p x (C_v + heads); features first, then attention
  Eigen::VectorXf left_b;   // C_p
  Eigen::MatrixXf right_w;  // C_p x C_v
  Eigen::VectorXf right_b;  // C_p
  Eigen::MatrixXf out_w;    // C x C_p

  int vit_channels() const { return static_cast<int>(right_w.cols()); }
  int heads() const { return static_cast<int>(left_w.cols() - right_w.cols()); }
  int reduced_channels() const { return static_cast<int>(left_w.rows()); }
  int out_channels() const { return static_cast<int>(out_w.rows()); }

  void Validate() const;

  // Entries uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)) drawn from
  // Xorshift64Star(seed) in the order left_w, left_b, right_w, right_b, out_w,
  // each matrix row-major.
  static GluWeights FromSeed(uint64_t seed, int vit_channels, int heads, int reduced_channels,
                             int out_channels);
};

// Weight file: a 1-D MVTF tensor [C_v, heads, C_p, C, then the parameters in
// the FromSeed order].
void WriteGluWeights(const GluWeights& w, const std::filesystem::path& path);
GluWeights ReadGluWeights(const std::filesystem::path& path);

inline float Swish(float x) { return x / (1.0f + std::exp(-x)); }

// Swish(W_l [F; A] + b_l) * Swish(W_r (F * mean(A)) + b_r), per pixel.
Tensor GluFuse(const VitFeatures& vit, const GluWeights& w);

// Projects `fused` (C_p x h x w) with w.out_w, upsamples x4 bilinearly and
// adds it to level 0. Other levels are unchanged.
FeaturePyramid InjectVit(const FeaturePyramid& pyramid, const Tensor& fused, const GluWeights& w);

// Bilinear resize with half-pixel centers and edge clamping.
Tensor ResizeBilinear(const Tensor& feat, int height, int width);

// Scales every pixel's sub-vector within each of `groups` channel groups to
// unit L2 norm (norms below 1e-8 leave the vector at zero). Accepts C x H x W
// maps and C x D x H x W warped volumes.
Tensor GroupNormalize(const Tensor& feat, int groups);

}  // namespace mvsweep
