#include "mvsweep/config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "mvsweep/features.h"
#include "mvsweep/io.h"

namespace mvsweep {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
std::string Num(T v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
T ParseNumber(const std::string& s) {
  const std::string t = Trim(s);
  if (t == "inf") return std::numeric_limits<T>::infinity();
  T v{};
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw std::invalid_argument("bad number '" + t + "'");
  }
  return v;
}

template <typename T, size_t N>
std::array<T, N> ParseList(const std::string& s) {
  std::array<T, N> out{};
  std::istringstream in(s);
  std::string tok;
  size_t n = 0;
  while (std::getline(in, tok, ',')) {
    if (n == N) throw std::invalid_argument("expected " + std::to_string(N) + " values");
    out[n++] = ParseNumber<T>(tok);
  }
  if (n != N) throw std::invalid_argument("expected " + std::to_string(N) + " values");
  return out;
}

template <typename T, size_t N>
std::string JoinList(const std::array<T, N>& a) {
  std::string out;
  for (size_t i = 0; i < N; ++i) out += (i ? "," : "") + Num(a[i]);
  return out;
}

struct Field {
  const char* key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
};

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = {
      {"hypotheses", [](const auto& c) { return JoinList(c.hypotheses); },
       [](auto& c, const auto& v) { c.hypotheses = ParseList<int, 4>(v); }},
      {"temperatures", [](const auto& c) { return JoinList(c.temperatures); },
       [](auto& c, const auto& v) { c.temperatures = ParseTemperatures(v); }},
      {"groups", [](const auto& c) { return Num(c.groups); },
       [](auto& c, const auto& v) { c.groups = ParseNumber<int>(v); }},
      {"channels", [](const auto& c) { return Num(c.channels); },
       [](auto& c, const auto& v) { c.channels = ParseNumber<int>(v); }},
      {"views", [](const auto& c) { return Num(c.views); },
       [](auto& c, const auto& v) { c.views = ParseNumber<int>(v); }},
      {"logit_gain", [](const auto& c) { return Num(c.logit_gain); },
       [](auto& c, const auto& v) { c.logit_gain = ParseNumber<float>(v); }},
      {"sigma_depth", [](const auto& c) { return Num(c.regularize.sigma_depth); },
       [](auto& c, const auto& v) { c.regularize.sigma_depth = ParseNumber<double>(v); }},
      {"sigma_spatial", [](const auto& c) { return Num(c.regularize.sigma_spatial); },
       [](auto& c, const auto& v) { c.regularize.sigma_spatial = ParseNumber<double>(v); }},
      {"smoothing_radius", [](const auto& c) { return Num(c.regularize.radius); },
       [](auto& c, const auto& v) { c.regularize.radius = ParseNumber<int>(v); }},
      {"disparity_threshold", [](const auto& c) { return Num(c.filter.disparity_threshold); },
       [](auto& c, const auto& v) { c.filter.disparity_threshold = ParseNumber<double>(v); }},
      {"num_consistent", [](const auto& c) { return Num(c.filter.num_consistent); },
       [](auto& c, const auto& v) { c.filter.num_consistent = ParseNumber<int>(v); }},
      {"prob_threshold", [](const auto& c) { return Num(c.filter.prob_threshold); },
       [](auto& c, const auto& v) { c.filter.prob_threshold = ParseNumber<double>(v); }},
      {"reproj_threshold", [](const auto& c) { return Num(c.filter.reproj_threshold_px); },
       [](auto& c, const auto& v) { c.filter.reproj_threshold_px = ParseNumber<double>(v); }},
      {"filter_mode",
       [](const auto& c) {
         return std::string(c.filter.mode == FilterMode::kStatic ? "static" : "dynamic");
       },
       [](auto& c, const auto& v) {
         if (v == "static") {
           c.filter.mode = FilterMode::kStatic;
         } else if (v == "dynamic") {
           c.filter.mode = FilterMode::kDynamic;
         } else {
           throw std::invalid_argument("expected static or dynamic, got '" + v + "'");
         }
       }},
      {"feature_source",
       [](const auto& c) {
         return std::string(c.feature_source == FeatureSource::kHandcrafted ? "handcrafted"
                                                                            : "vit-files");
       },
       [](auto& c, const auto& v) {
         if (v == "handcrafted") {
           c.feature_source = FeatureSource::kHandcrafted;
         } else if (v == "vit-files") {
           c.feature_source = FeatureSource::kVitFiles;
         } else {
           throw std::invalid_argument("expected handcrafted or vit-files, got '" + v + "'");
         }
       }},
      {"glu_seed", [](const auto& c) { return Num(c.glu_seed); },
       [](auto& c, const auto& v) { c.glu_seed = ParseNumber<uint64_t>(v); }},
      {"glu_reduced_channels", [](const auto& c) { return Num(c.glu_reduced_channels); },
       [](auto& c, const auto& v) { c.glu_reduced_channels = ParseNumber<int>(v); }},
      {"glu_weights", [](const auto& c) { return c.glu_weights.string(); },
       [](auto& c, const auto& v) { c.glu_weights = v; }},
  };
  return fields;
}

}  // namespace

void PipelineConfig::Validate() const {
  for (int i = 0; i < 4; ++i) {
    if (hypotheses[i] < 2) throw std::invalid_argument("hypotheses: each stage needs >= 2");
    if (i > 0 && hypotheses[i] * 2 != hypotheses[i - 1]) {
      throw std::invalid_argument("hypotheses: counts must halve from stage to stage");
    }
    if (!(temperatures[i] > 0.0f)) throw std::invalid_argument("temperatures: must be positive");
  }
  if (channels != kPyramidChannels) {
    throw std::invalid_argument("channels: the handcrafted pyramid has " +
                                std::to_string(kPyramidChannels) + " channels");
  }
  if (groups < 1 || channels % groups != 0) {
    throw std::invalid_argument("groups: must divide channels");
  }
  if (views < 2) throw std::invalid_argument("views: need a reference and at least one source");
  if (!(logit_gain > 0.0f) || !std::isfinite(logit_gain)) {
    throw std::invalid_argument("logit_gain: must be positive and finite");
  }
  if (!(regularize.sigma_depth > 0.0) || !(regularize.sigma_spatial > 0.0) ||
      regularize.radius < 0) {
    throw std::invalid_argument("sigma_depth/sigma_spatial/smoothing_radius out of range");
  }
  filter.Validate();
  if (glu_reduced_channels < 1) throw std::invalid_argument("glu_reduced_channels: must be >= 1");
}

std::array<float, 4> ParseTemperatures(const std::string& text) {
  return ParseList<float, 4>(text);
}

PipelineConfig ParseConfig(const std::string& text) {
  PipelineConfig config;
  std::map<std::string, const Field*> by_key;
  for (const auto& f : Fields()) by_key[f.key] = &f;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    if (Trim(raw).empty()) continue;
    const auto eq = raw.find('=');
    const std::string where = "config line " + std::to_string(line) + ": ";
    if (eq == std::string::npos) throw std::invalid_argument(where + "expected 'key = value'");
    const std::string key = Trim(raw.substr(0, eq));
    const std::string value = Trim(raw.substr(eq + 1));
    const auto it = by_key.find(key);
    if (it == by_key.end()) throw std::invalid_argument(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw std::invalid_argument(where + "repeated key '" + key + "'");
    try {
      it->second->set(config, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + key + ": " + e.what());
    }
  }
  config.Validate();
  return config;
}

PipelineConfig ReadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoErrc::kOpenFailed, path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

std::string SerializeConfig(const PipelineConfig& config) {
  std::string out;
  for (const auto& f : Fields()) out += std::string(f.key) + " = " + f.get(config) + "\n";
  return out;
}

}  // namespace mvsweep
