#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mvsweep {

enum class ModelVariant { kPlain, kHierarchical };  // "P" and "H"

// One row of the multi-scale table: a height and a 64-px grid of widths
// sharing one sub-batch size.
struct ScalePattern {
  int height = 0;
  int width_min = 0;
  int width_max = 0;
  int sub_batch = 0;
};

struct Resolution {
  int height = 0;
  int width = 0;
  int sub_batch = 0;
};

// Rows of the multi-scale training table for the given variant.
std::vector<ScalePattern> DefaultPatterns(ModelVariant variant);

// Concrete (height, width, sub_batch) triples, rows in order, widths
// ascending on the 64-px grid.
std::vector<Resolution> ExpandPatterns(const std::vector<ScalePattern>& patterns);

struct PlanGroup {
  int height = 0;
  int width = 0;
  int sub_batch = 0;
  int accumulation_steps = 0;
  std::vector<int> sample_indices;
};

struct EpochPlan {
  std::vector<PlanGroup> groups;
};

// Shuffles 0..num_samples-1 with Xorshift64Star(seed) (Fisher-Yates from the
// back), cuts the permutation into groups of `batch`, and draws one expanded
// resolution per group from the same generator. Throws std::invalid_argument
// when a pattern's sub-batch does not divide `batch`.
EpochPlan MakeEpochPlan(int num_samples, const std::vector<ScalePattern>& patterns, int batch,
                        uint64_t seed);

enum class ViolationKind {
  kDuplicateSample,
  kMissingSample,
  kAccumulation,   // full group with sub_batch * steps != batch
  kPartialGroup,   // a non-final group is short, or a group exceeds the batch
  kBadResolution,  // dims not on the 64-px grid or non-positive sizes
};

struct Violation {
  ViolationKind kind;
  int group = -1;
  std::string message;
};

std::vector<Violation> ValidatePlan(const EpochPlan& plan, int batch);

// One group per line: "H W sub_batch steps idx,idx,...".
std::string FormatPlan(const EpochPlan& plan);
EpochPlan ParsePlan(const std::string& text);

}  // namespace mvsweep
