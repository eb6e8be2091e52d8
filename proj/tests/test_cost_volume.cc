#include <cmath>

#include "doctest.h"
#include "mvsweep/cost_volume.h"
#include "mvsweep/features.h"
#include "test_util.h"

using namespace mvsweep;

namespace {

WarpedFeature Replicate(const Tensor& feat, int num) {
  const int c = feat.dim(0), h = feat.dim(1), w = feat.dim(2);
  WarpedFeature out{Tensor({c, num, h, w}), Tensor({num, h, w}, 1.0f)};
  for (int k = 0; k < c; ++k)
    for (int j = 0; j < num; ++j)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.data.at(k, j, y, x) = feat.at(k, y, x);
  return out;
}

CostVolume FromColumn(const std::vector<float>& col) {
  const int d = static_cast<int>(col.size());
  CostVolume v{Tensor({1, d, 1, 1}, col), Tensor({d, 1, 1}, 1.0f)};
  return v;
}

double VisibilityOracle(const std::vector<double>& corr, double gain) {
  double max = -1e300;
  for (double c : corr) max = std::max(max, gain * c);
  double sum = 0;
  for (double c : corr) sum += std::exp(gain * c - max);
  double h = 0;
  for (double c : corr) {
    const double p = std::exp(gain * c - max) / sum;
    if (p > 0) h -= p * std::log(p);
  }
  return std::clamp(1.0 - h / std::log(double(corr.size())), 1e-3, 1.0);
}

}  // namespace

TEST_CASE("self match correlates to one and orthogonal features to zero") {
  Xorshift64Star rng(1);
  const Tensor ref = GroupNormalize(testing::RandomTensor(rng, {8, 4, 5}), 4);
  const CostVolume self = GroupwiseCorrelation(ref, Replicate(ref, 3), 4);
  CHECK(self.data.shape() == Tensor::Shape{4, 3, 4, 5});
  for (float v : self.data.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));

  // Rotate every 2-channel group by 90 degrees.
  Tensor ortho(ref.shape());
  for (int g = 0; g < 4; ++g)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 5; ++x) {
        ortho.at(2 * g, y, x) = -ref.at(2 * g + 1, y, x);
        ortho.at(2 * g + 1, y, x) = ref.at(2 * g, y, x);
      }
  const CostVolume o = GroupwiseCorrelation(ref, Replicate(ortho, 2), 4);
  for (float v : o.data.data()) CHECK(std::abs(v) < 1e-6);
}

TEST_CASE("correlation matches a brute-force oracle") {
  Xorshift64Star rng(2);
  const int c = 8, g = 2, d = 3, h = 4, w = 3;
  const Tensor ref = GroupNormalize(testing::RandomTensor(rng, {c, h, w}), g);
  WarpedFeature warped{GroupNormalize(testing::RandomTensor(rng, {c, d, h, w}), g),
                       Tensor({d, h, w}, 1.0f)};
  warped.validity.at(1, 2, 0) = 0.0f;
  const CostVolume vol = GroupwiseCorrelation(ref, warped, g);
  for (int gi = 0; gi < g; ++gi)
    for (int j = 0; j < d; ++j)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double s = 0;
          for (int k = gi * 4; k < gi * 4 + 4; ++k) s += double(ref.at(k, y, x)) * warped.data.at(k, j, y, x);
          if (j == 1 && y == 2 && x == 0) s = 0;
          CHECK(vol.data.at(gi, j, y, x) == doctest::Approx(s).epsilon(1e-6));
          CHECK(vol.data.at(gi, j, y, x) <= 1.0f + 1e-5f);
          CHECK(vol.data.at(gi, j, y, x) >= -1.0f - 1e-5f);
        }
  CHECK(vol.validity.at(1, 2, 0) == 0.0f);
  CHECK_THROWS_AS(GroupwiseCorrelation(ref, warped, 3), std::invalid_argument);
}

TEST_CASE("group mean") {
  CostVolume v{Tensor({2, 1, 1, 2}, std::vector<float>{1, 2, 3, 6}), Tensor({1, 1, 2}, 1.0f)};
  const Tensor m = GroupMean(v);
  CHECK(m[0] == 2.0f);
  CHECK(m[1] == 4.0f);
}

TEST_CASE("visibility weight") {
  std::vector<float> col(32, -1.0f);
  col[7] = 1.0f;
  CHECK(VisibilityWeight(FromColumn(col), 32.0f)[0] == doctest::Approx(1.0).epsilon(1e-6));

  CHECK(VisibilityWeight(FromColumn(std::vector<float>(8, 0.3f)))[0] == kVisibilityFloor);
  CHECK(VisibilityWeight(FromColumn({0.5f, 0.5f}))[0] == kVisibilityFloor);
  CHECK(VisibilityWeight(FromColumn({1.0f, -1.0f}), 1000.0f)[0] == 1.0f);

  Xorshift64Star rng(3);
  for (int i = 0; i < 50; ++i) {
    const int d = 2 + static_cast<int>(rng.Below(10));
    std::vector<float> c(d);
    std::vector<double> cd(d);
    for (int j = 0; j < d; ++j) cd[j] = c[j] = static_cast<float>(rng.Uniform(-1, 1));
    const double gain = rng.Uniform(0.5, 20);
    const float wv = VisibilityWeight(FromColumn(c), static_cast<float>(gain))[0];
    CHECK(wv == doctest::Approx(VisibilityOracle(cd, gain)).epsilon(1e-5));
    // Shift invariance.
    for (float& v : c) v += 0.25f;
    CHECK(VisibilityWeight(FromColumn(c), static_cast<float>(gain))[0] == doctest::Approx(wv).epsilon(1e-4));
  }
}

TEST_CASE("visibility excludes invalid hypotheses") {
  CostVolume v = FromColumn({1.0f, -1.0f, 1.0f});
  CHECK(VisibilityWeight(v, 50.0f)[0] < 0.5f);
  v.validity[2] = 0.0f;
  // Two valid entries, entropy still normalized by ln 3.
  const double q = std::exp(-100.0) / (1.0 + std::exp(-100.0));
  const double h = -((1 - q) * std::log1p(-q) + q * std::log(q));
  CHECK(VisibilityWeight(v, 50.0f)[0] == doctest::Approx(std::clamp(1 - h / std::log(3.0), 1e-3, 1.0)));
  v.validity = Tensor({3, 1, 1});
  CHECK(VisibilityWeight(v)[0] == kVisibilityFloor);
}

TEST_CASE("volume fusion") {
  const CostVolume zeros{Tensor({2, 3, 2, 2}, 0.0f), Tensor({3, 2, 2}, 1.0f)};
  const CostVolume ones{Tensor({2, 3, 2, 2}, 1.0f), Tensor({3, 2, 2}, 1.0f)};
  const std::vector<CostVolume> vols = {zeros, ones};
  const std::vector<Tensor> weights = {Tensor({2, 2}, 1.0f), Tensor({2, 2}, 3.0f)};
  const CostVolume fused = FuseVolumes(vols, weights);
  for (float v : fused.data.data()) CHECK(v == doctest::Approx(0.75));

  Xorshift64Star rng(4);
  const CostVolume r{testing::RandomTensor(rng, {2, 3, 2, 2}), Tensor({3, 2, 2}, 1.0f)};
  const std::vector<CostVolume> single = {r};
  const std::vector<Tensor> w1 = {testing::RandomTensor(rng, {2, 2}, 0.1, 1)};
  CHECK(FuseVolumes(single, w1).data.BitEquals(r.data));
  const std::vector<CostVolume> same = {r, r};
  const std::vector<Tensor> w2 = {testing::RandomTensor(rng, {2, 2}, 0.1, 1),
                                  testing::RandomTensor(rng, {2, 2}, 0.1, 1)};
  const CostVolume f2 = FuseVolumes(same, w2);
  for (size_t i = 0; i < r.data.size(); ++i) CHECK(f2.data[i] == doctest::Approx(r.data[i]).epsilon(1e-6));

  CHECK_THROWS_AS(FuseVolumes(std::span<const CostVolume>{}, std::span<const Tensor>{}),
                  std::invalid_argument);
}

TEST_CASE("volume fusion validity") {
  CostVolume a{Tensor({1, 2, 1, 1}, std::vector<float>{0.2f, 0.4f}), Tensor({2, 1, 1}, std::vector<float>{1, 0})};
  CostVolume b{Tensor({1, 2, 1, 1}, std::vector<float>{0.6f, 0.9f}), Tensor({2, 1, 1}, std::vector<float>{1, 0})};
  std::vector<CostVolume> vols = {a, b};
  std::vector<Tensor> w = {Tensor({1, 1}, 1.0f), Tensor({1, 1}, 1.0f)};
  CostVolume f = FuseVolumes(vols, w);
  CHECK(f.data[0] == doctest::Approx(0.4));
  CHECK(f.data[1] == -1.0f);
  CHECK(f.validity[0] == 1.0f);
  CHECK(f.validity[1] == 0.0f);

  // Only b covers hypothesis 1: its value passes through.
  vols[1].validity[1] = 1.0f;
  f = FuseVolumes(vols, w);
  CHECK(f.data[1] == doctest::Approx(0.9));
  CHECK(f.validity[1] == 1.0f);
}

TEST_CASE("fused entries stay within the inputs") {
  Xorshift64Star rng(5);
  std::vector<CostVolume> vols;
  std::vector<Tensor> w;
  for (int v = 0; v < 4; ++v) {
    vols.push_back({testing::RandomTensor(rng, {2, 4, 3, 3}), Tensor({4, 3, 3}, 1.0f)});
    w.push_back(testing::RandomTensor(rng, {3, 3}, 1e-3, 1));
  }
  const CostVolume f = FuseVolumes(vols, w);
  for (size_t i = 0; i < f.data.size(); ++i) {
    float lo = 1e9f, hi = -1e9f;
    for (const auto& v : vols) {
      lo = std::min(lo, v.data[i]);
      hi = std::max(hi, v.data[i]);
    }
    CHECK(f.data[i] >= lo - 1e-6f);
    CHECK(f.data[i] <= hi + 1e-6f);
  }
}

TEST_CASE("gaussian kernel") {
  const auto k = GaussianKernel(1.0, 2);
  REQUIRE(k.size() == 5);
  double z = 0;
  for (int i = -2; i <= 2; ++i) z += std::exp(-0.5 * i * i);
  for (int i = -2; i <= 2; ++i) CHECK(k[i + 2] == doctest::Approx(std::exp(-0.5 * i * i) / z).epsilon(1e-6));
}

TEST_CASE("regularization") {
  double z = 0;
  for (int i = -2; i <= 2; ++i) z += std::exp(-0.5 * i * i);
  const double center = 1.0 / z;

  SUBCASE("constant volume") {
    const CostVolume c{Tensor({4, 6, 5, 7}, 0.3f), Tensor({6, 5, 7}, 1.0f)};
    const Tensor r = Regularize(c);
    CHECK(r.shape() == Tensor::Shape{6, 5, 7});
    for (float v : r.data()) CHECK(v == doctest::Approx(0.3).epsilon(1e-6));
  }

  SUBCASE("impulse") {
    CostVolume imp{Tensor({1, 11, 11, 11}), Tensor({11, 11, 11}, 1.0f)};
    imp.data.at(0, 5, 5, 5) = 1.0f;
    const Tensor once = Regularize(imp);
    CHECK(once.at(5, 5, 5) == doctest::Approx(center * center * center).epsilon(1e-6));
    double mass1 = 0;
    for (float v : once.data()) mass1 += v;
    CHECK(mass1 == doctest::Approx(1.0).epsilon(1e-4));
    CostVolume again{Tensor({1, 11, 11, 11}, std::vector<float>(once.data().begin(), once.data().end())),
                     imp.validity};
    const Tensor twice = Regularize(again);
    double mass2 = 0;
    for (float v : twice.data()) mass2 += v;
    CHECK(mass2 == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(twice.at(5, 5, 5) < once.at(5, 5, 5));
  }

  SUBCASE("negation") {
    Xorshift64Star rng(6);
    CostVolume v{testing::RandomTensor(rng, {2, 5, 4, 6}), Tensor({5, 4, 6}, 1.0f)};
    const Tensor a = Regularize(v);
    for (float& x : v.data.data()) x = -x;
    const Tensor b = Regularize(v);
    for (size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(-a[i]).epsilon(1e-6));
  }
}
