#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <unistd.h>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "mvsweep/geometry.h"
#include "mvsweep/io.h"
#include "mvsweep/random.h"
#include "mvsweep/tensor.h"

namespace testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mvsweep_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<unsigned char> ReadBytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void WriteText(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string ReadText(const std::filesystem::path& p) {
  const auto b = ReadBytes(p);
  return std::string(b.begin(), b.end());
}

inline mvsweep::Tensor RandomTensor(mvsweep::Xorshift64Star& rng, mvsweep::Tensor::Shape shape,
                                    double lo = -1.0, double hi = 1.0) {
  mvsweep::Tensor t(std::move(shape));
  for (float& v : t.data()) v = static_cast<float>(rng.Uniform(lo, hi));
  return t;
}

inline Eigen::Matrix3d RandomRotation(mvsweep::Xorshift64Star& rng, double max_angle) {
  Eigen::Vector3d axis(rng.Uniform(-1, 1), rng.Uniform(-1, 1), rng.Uniform(-1, 1));
  if (axis.norm() < 1e-3) axis = Eigen::Vector3d::UnitY();
  return Eigen::AngleAxisd(rng.Uniform(-max_angle, max_angle), axis.normalized())
      .toRotationMatrix();
}

inline mvsweep::CameraView RandomCamera(mvsweep::Xorshift64Star& rng) {
  mvsweep::CameraView cam;
  const double f = rng.Uniform(80, 600);
  cam.K << f, 0, rng.Uniform(40, 400), 0, f * rng.Uniform(0.9, 1.1), rng.Uniform(30, 300), 0, 0, 1;
  cam.R = RandomRotation(rng, 0.4);
  cam.t = Eigen::Vector3d(rng.Uniform(-1, 1), rng.Uniform(-1, 1), rng.Uniform(-1, 1));
  cam.d_min = 0.5;
  cam.d_max = 50.0;
  return cam;
}

// FNV-1a over a byte range; used for golden-file checksums.
inline uint64_t Fnv1a(const std::vector<unsigned char>& bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Writes <root>/vit/ feature files and manifest.txt for every view listed in
// views.txt. Tokens are smooth functions of the 32x32 block means of each
// image, so corresponding surface regions get similar features.
inline void WriteSyntheticVit(const std::filesystem::path& root, int vit_channels = 6,
                              int heads = 3) {
  namespace fs = std::filesystem;
  fs::create_directories(root / "vit");
  std::ifstream list(root / "views.txt");
  std::ofstream manifest(root / "vit" / "manifest.txt");
  manifest << "# image feat attn attn_mean model size\n";
  for (std::string id; list >> id;) {
    const mvsweep::Tensor img = mvsweep::ReadImage(root / "images" / (id + ".ppm"));
    const int h = img.dim(0) / 32, w = img.dim(1) / 32;
    mvsweep::Tensor feat({vit_channels, h, w}), attn({heads, h, w}), mean({1, h, w});
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double m = 0;
        for (int yy = 0; yy < 32; ++yy)
          for (int xx = 0; xx < 32; ++xx)
            for (int c = 0; c < 3; ++c) m += img.at(y * 32 + yy, x * 32 + xx, c);
        m /= 32.0 * 32.0 * 3.0;
        for (int c = 0; c < vit_channels; ++c)
          feat.at(c, y, x) = static_cast<float>(0.2 * std::sin((c + 1) * 6.0 * m));
        double sum = 0;
        for (int k = 0; k < heads; ++k) {
          attn.at(k, y, x) = static_cast<float>(0.5 + 0.1 * (k + 1) * m);
          sum += attn.at(k, y, x);
        }
        mean.at(0, y, x) = static_cast<float>(sum / heads);
      }
    mvsweep::WriteTensorFile(feat, root / "vit" / (id + "_feat.mvtf"));
    mvsweep::WriteTensorFile(attn, root / "vit" / (id + "_attn.mvtf"));
    mvsweep::WriteTensorFile(mean, root / "vit" / (id + "_attn_mean.mvtf"));
    manifest << "images/" << id << ".ppm " << id << "_feat.mvtf " << id << "_attn.mvtf " << id
             << "_attn_mean.mvtf synthetic " << img.dim(0) << "x" << img.dim(1) << "\n";
  }
}

}  // namespace testing
