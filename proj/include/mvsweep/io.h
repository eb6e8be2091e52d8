#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mvsweep/tensor.h"

namespace mvsweep {

enum class IoErrc {
  kOpenFailed,
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kMalformedHeader,
  kUnsupportedEndianness,
  kMissingSection,
  kNonOrthonormal,
  kInvertedRange,
  kInvalidValue,
};

const char* IoErrcName(IoErrc code);

class IoError : public std::runtime_error {
 public:
  IoError(IoErrc code, const std::string& what)
      : std::runtime_error(std::string(IoErrcName(code)) + ": " + what),
        code_(code) {}
  IoErrc code() const { return code_; }

 private:
  IoErrc code_;
};

struct PointCloud {
  std::vector<Eigen::Vector3f> points;
  std::vector<std::array<uint8_t, 3>> colors;

  size_t size() const { return points.size(); }
  // Throws std::invalid_argument when lengths differ or a coordinate is not
  // finite.
  void Validate() const;
};

// MVTF: "MVTF", u32 version (1), u32 ndim, u32 dims[ndim], f32 payload.
// All integers and floats little-endian.
inline constexpr uint32_t kMvtfVersion = 1;
void WriteTensorFile(const Tensor& t, const std::filesystem::path& path);
Tensor ReadTensorFile(const std::filesystem::path& path);

// Single-channel PFM, scale -1.0 (little-endian), rows stored bottom-up.
void WritePfm(const Tensor& depth, const std::filesystem::path& path);
Tensor ReadPfm(const std::filesystem::path& path);

// Binary little-endian PLY 1.0 with float x y z and uchar red green blue.
void WritePly(const PointCloud& cloud, const std::filesystem::path& path);
// Reads binary little-endian or ASCII PLY vertex positions (and colors when
// present).
PointCloud ReadPly(const std::filesystem::path& path);

struct CameraFile {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  double d_min = 0.0;
  double d_interval = 0.0;
  int d_num = 0;
  double d_max = 0.0;
};

// Text camera file:
//   extrinsic
//   <4x4 world-to-camera, row-major>
//   intrinsic
//   <3x3>
//   d_min d_interval d_num d_max
CameraFile ReadCam(const std::filesystem::path& path);
CameraFile ParseCam(const std::string& text);
void WriteCam(const CameraFile& cam, const std::filesystem::path& path);

// 8-bit binary PGM (P5) or PPM (P6). Returns H x W x 3 in [0, 1]; grayscale
// is replicated to three channels.
Tensor ReadImage(const std::filesystem::path& path);
// Writes H x W x 3 in [0, 1] as P6.
void WritePpm(const Tensor& image, const std::filesystem::path& path);

}  // namespace mvsweep
