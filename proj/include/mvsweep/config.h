#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "mvsweep/cost_volume.h"
#include "mvsweep/fusion.h"

namespace mvsweep {

enum class FeatureSource { kHandcrafted, kVitFiles };

struct PipelineConfig {
  std::array<int, 4> hypotheses = {32, 16, 8, 4};
  std::array<float, 4> temperatures = {5.0f, 2.5f, 1.5f, 1.0f};
  int groups = 4;
  int channels = 8;
  int views = 5;
  // Multiplier applied to the regularized correlation (and to the visibility
  // softmax) before temperature scaling. Correlations of unit-norm groups lie
  // in [-1, 1], far too flat for a softmax to commit.
  float logit_gain = 32.0f;
  RegularizeOptions regularize;
  FilterParams filter;
  FeatureSource feature_source = FeatureSource::kHandcrafted;
  uint64_t glu_seed = 0;
  int glu_reduced_channels = 32;
  std::filesystem::path glu_weights;  // empty: weights drawn from glu_seed

  // Throws std::invalid_argument naming the offending key.
  void Validate() const;
};

// "key = value" lines; '#' starts a comment. Unknown or repeated keys and
// unparsable values are errors carrying the line number. Missing keys keep
// their defaults.
PipelineConfig ParseConfig(const std::string& text);
PipelineConfig ReadConfig(const std::filesystem::path& path);

// Canonical form: every key, fixed order, shortest round-trip numbers.
std::string SerializeConfig(const PipelineConfig& config);

// "5,2.5,1.5,1" or "inf,inf,inf,inf".
std::array<float, 4> ParseTemperatures(const std::string& text);

}  // namespace mvsweep
