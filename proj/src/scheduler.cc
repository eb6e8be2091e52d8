#include "mvsweep/scheduler.h"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mvsweep/random.h"

namespace mvsweep {

std::vector<ScalePattern> DefaultPatterns(ModelVariant variant) {
  const bool plain = variant == ModelVariant::kPlain;
  // 832 x 1024~1152 is the one height of the 512..1024 grid the usual
  // sub-batch table skips; restoring it gives 25 training resolutions. Its sub-batch follows its
  // neighbours (both 4 for either variant).
  return {
      {512, 640, 768, 8},
      {576, 704, 832, 8},
      {640, 832, 960, 8},
      {704, 896, 1024, plain ? 8 : 4},
      {768, 960, 1088, 4},
      {832, 1024, 1152, 4},
      {896, 1152, 1280, 4},
      {960, 1216, 1344, plain ? 4 : 2},
      {1024, 1280, 1280, plain ? 4 : 2},
  };
}

std::vector<Resolution> ExpandPatterns(const std::vector<ScalePattern>& patterns) {
  std::vector<Resolution> out;
  for (const auto& p : patterns) {
    for (int w = p.width_min; w <= p.width_max; w += 64) out.push_back({p.height, w, p.sub_batch});
  }
  return out;
}

EpochPlan MakeEpochPlan(int num_samples, const std::vector<ScalePattern>& patterns, int batch,
                        uint64_t seed) {
  if (num_samples < 1) throw std::invalid_argument("an epoch needs at least one sample");
  if (batch < 1) throw std::invalid_argument("batch size must be positive");
  for (const auto& p : patterns) {
    if (p.sub_batch < 1 || batch % p.sub_batch != 0) {
      throw std::invalid_argument("sub-batch " + std::to_string(p.sub_batch) +
                                  " does not divide batch size " + std::to_string(batch));
    }
  }
  const auto resolutions = ExpandPatterns(patterns);
  if (resolutions.empty()) throw std::invalid_argument("no scale patterns");

  Xorshift64Star rng(seed);
  std::vector<int> order(num_samples);
  std::iota(order.begin(), order.end(), 0);
  for (int i = num_samples - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.Below(static_cast<uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }

  EpochPlan plan;
  for (int start = 0; start < num_samples; start += batch) {
    const int size = std::min(batch, num_samples - start);
    const Resolution& r = resolutions[rng.Below(resolutions.size())];
    PlanGroup g;
    g.height = r.height;
    g.width = r.width;
    g.sub_batch = r.sub_batch;
    g.accumulation_steps = size == batch ? batch / r.sub_batch : (size + r.sub_batch - 1) / r.sub_batch;
    g.sample_indices.assign(order.begin() + start, order.begin() + start + size);
    plan.groups.push_back(std::move(g));
  }
  return plan;
}

std::vector<Violation> ValidatePlan(const EpochPlan& plan, int batch) {
  std::vector<Violation> out;
  auto report = [&out](ViolationKind kind, int group, std::string msg) {
    out.push_back({kind, group, std::move(msg)});
  };
  // Coverage is checked against 0..max scheduled index.
  size_t total = 0;
  for (const auto& g : plan.groups) {
    for (int idx : g.sample_indices) {
      if (idx >= 0) total = std::max(total, static_cast<size_t>(idx) + 1);
    }
  }
  std::vector<int> seen(total, 0);

  for (size_t gi = 0; gi < plan.groups.size(); ++gi) {
    const auto& g = plan.groups[gi];
    const int id = static_cast<int>(gi);
    const int size = static_cast<int>(g.sample_indices.size());
    if (g.height <= 0 || g.width <= 0 || g.height % 64 != 0 || g.width % 64 != 0 ||
        g.sub_batch <= 0 || g.accumulation_steps <= 0) {
      report(ViolationKind::kBadResolution, id,
             std::to_string(g.height) + "x" + std::to_string(g.width) + " sub-batch " +
                 std::to_string(g.sub_batch) + " steps " + std::to_string(g.accumulation_steps));
    }
    const bool last = gi + 1 == plan.groups.size();
    if (size > batch || size == 0 || (!last && size < batch)) {
      report(ViolationKind::kPartialGroup, id,
             "group holds " + std::to_string(size) + " samples with batch " +
                 std::to_string(batch));
    }
    if (size == batch) {
      if (g.sub_batch * g.accumulation_steps != batch) {
        report(ViolationKind::kAccumulation, id,
               std::to_string(g.sub_batch) + " x " + std::to_string(g.accumulation_steps) +
                   " != " + std::to_string(batch));
      }
    } else if (size > 0 && g.sub_batch > 0 &&
               g.accumulation_steps != (size + g.sub_batch - 1) / g.sub_batch) {
      report(ViolationKind::kAccumulation, id,
             "partial group of " + std::to_string(size) + " with sub-batch " +
                 std::to_string(g.sub_batch) + " needs " +
                 std::to_string((size + g.sub_batch - 1) / g.sub_batch) + " steps");
    }
    for (int idx : g.sample_indices) {
      if (idx < 0) {
        report(ViolationKind::kMissingSample, id, "negative sample index " + std::to_string(idx));
      } else if (seen[idx]++ == 1) {
        report(ViolationKind::kDuplicateSample, id, "sample " + std::to_string(idx) + " repeated");
      }
    }
  }
  for (size_t i = 0; i < total; ++i) {
    if (seen[i] == 0) {
      report(ViolationKind::kMissingSample, -1, "sample " + std::to_string(i) + " never scheduled");
    }
  }
  return out;
}

std::string FormatPlan(const EpochPlan& plan) {
  std::string out;
  for (const auto& g : plan.groups) {
    out += std::to_string(g.height) + ' ' + std::to_string(g.width) + ' ' +
           std::to_string(g.sub_batch) + ' ' + std::to_string(g.accumulation_steps) + ' ';
    for (size_t i = 0; i < g.sample_indices.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(g.sample_indices[i]);
    }
    out += '\n';
  }
  return out;
}

EpochPlan ParsePlan(const std::string& text) {
  EpochPlan plan;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    PlanGroup g;
    std::string indices;
    if (!(ls >> g.height >> g.width >> g.sub_batch >> g.accumulation_steps >> indices)) {
      throw std::invalid_argument("plan line " + std::to_string(line_no) + ": expected 5 fields");
    }
    std::istringstream is(indices);
    std::string tok;
    while (std::getline(is, tok, ',')) {
      try {
        size_t used = 0;
        g.sample_indices.push_back(std::stoi(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw std::invalid_argument("plan line " + std::to_string(line_no) + ": bad index '" +
                                    tok + "'");
      }
    }
    plan.groups.push_back(std::move(g));
  }
  return plan;
}

}  // namespace mvsweep
