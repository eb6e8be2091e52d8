#include "mvsweep/io.h"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <Eigen/LU>

namespace mvsweep {

const char* IoErrcName(IoErrc code) {
  switch (code) {
    case IoErrc::kOpenFailed: return "open failed";
    case IoErrc::kBadMagic: return "bad magic";
    case IoErrc::kVersionMismatch: return "version mismatch";
    case IoErrc::kTruncated: return "truncated payload";
    case IoErrc::kMalformedHeader: return "malformed header";
    case IoErrc::kUnsupportedEndianness: return "unsupported endianness";
    case IoErrc::kMissingSection: return "missing section";
    case IoErrc::kNonOrthonormal: return "non-orthonormal rotation";
    case IoErrc::kInvertedRange: return "inverted depth range";
    case IoErrc::kInvalidValue: return "invalid value";
  }
  return "unknown";
}

void PointCloud::Validate() const {
  if (points.size() != colors.size()) {
    throw std::invalid_argument("point cloud has " +
                                std::to_string(points.size()) + " points but " +
                                std::to_string(colors.size()) + " colors");
  }
  for (const auto& p : points) {
    if (!p.allFinite()) {
      throw std::invalid_argument("point cloud holds a non-finite coordinate");
    }
  }
}

namespace {

std::string ReadWholeFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoErrc::kOpenFailed, path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::ofstream OpenForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoErrc::kOpenFailed, path.string());
  return out;
}

void AppendU32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void AppendF32(std::string& buf, float f) {
  AppendU32(buf, std::bit_cast<uint32_t>(f));
}

uint32_t LoadU32(const char* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return v;
}

float LoadF32(const char* p) { return std::bit_cast<float>(LoadU32(p)); }

void Flush(std::ofstream& out, const std::string& buf,
           const std::filesystem::path& path) {
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError(IoErrc::kOpenFailed, "write failed: " + path.string());
}

// Header tokenizer for the small text headers of PFM and PNM.
class HeaderReader {
 public:
  explicit HeaderReader(const std::string& buf) : buf_(buf) {}

  bool Token(std::string* tok, bool skip_comments) {
    SkipSpace(skip_comments);
    size_t start = pos_;
    while (pos_ < buf_.size() && !std::isspace(static_cast<unsigned char>(buf_[pos_]))) {
      ++pos_;
    }
    *tok = buf_.substr(start, pos_ - start);
    return !tok->empty();
  }

  // Consumes exactly one whitespace byte separating header from payload.
  bool EndHeader() {
    if (pos_ >= buf_.size() || !std::isspace(static_cast<unsigned char>(buf_[pos_]))) {
      return false;
    }
    ++pos_;
    return true;
  }

  size_t pos() const { return pos_; }

 private:
  void SkipSpace(bool skip_comments) {
    while (pos_ < buf_.size()) {
      const char c = buf_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (skip_comments && c == '#') {
        while (pos_ < buf_.size() && buf_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& buf_;
  size_t pos_ = 0;
};

bool ParseInt(const std::string& s, long* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  *out = std::strtol(s.c_str(), &end, 10);
  return *end == '\0';
}

bool ParseDouble(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  *out = std::strtod(s.c_str(), &end);
  return *end == '\0';
}

}  // namespace

void WriteTensorFile(const Tensor& t, const std::filesystem::path& path) {
  std::string buf = "MVTF";
  AppendU32(buf, kMvtfVersion);
  AppendU32(buf, static_cast<uint32_t>(t.ndim()));
  for (int d : t.shape()) AppendU32(buf, static_cast<uint32_t>(d));
  buf.reserve(buf.size() + 4 * t.size());
  for (float f : t.data()) AppendF32(buf, f);
  auto out = OpenForWrite(path);
  Flush(out, buf, path);
}

Tensor ReadTensorFile(const std::filesystem::path& path) {
  const std::string buf = ReadWholeFile(path);
  if (buf.size() < 4 || buf.compare(0, 4, "MVTF") != 0) {
    throw IoError(IoErrc::kBadMagic, path.string());
  }
  if (buf.size() < 12) throw IoError(IoErrc::kTruncated, "header of " + path.string());
  const uint32_t version = LoadU32(buf.data() + 4);
  if (version != kMvtfVersion) {
    throw IoError(IoErrc::kVersionMismatch,
                  "expected " + std::to_string(kMvtfVersion) + ", got " +
                      std::to_string(version));
  }
  const uint32_t ndim = LoadU32(buf.data() + 8);
  if (ndim < 1 || ndim > 4) {
    throw IoError(IoErrc::kMalformedHeader, "ndim " + std::to_string(ndim));
  }
  if (buf.size() < 12 + 4 * ndim) throw IoError(IoErrc::kTruncated, "shape");
  Tensor::Shape shape(ndim);
  for (uint32_t i = 0; i < ndim; ++i) {
    const uint32_t d = LoadU32(buf.data() + 12 + 4 * i);
    if (d == 0 || d > 0x7FFFFFFFu) {
      throw IoError(IoErrc::kMalformedHeader, "dimension " + std::to_string(d));
    }
    shape[i] = static_cast<int>(d);
  }
  const size_t count = ShapeProduct(shape);
  const size_t offset = 12 + 4 * ndim;
  if (buf.size() - offset < 4 * count) {
    throw IoError(IoErrc::kTruncated,
                  "expected " + std::to_string(4 * count) + " payload bytes, got " +
                      std::to_string(buf.size() - offset));
  }
  std::vector<float> data(count);
  for (size_t i = 0; i < count; ++i) data[i] = LoadF32(buf.data() + offset + 4 * i);
  return Tensor(std::move(shape), std::move(data));
}

void WritePfm(const Tensor& depth, const std::filesystem::path& path) {
  if (depth.ndim() != 2) {
    throw std::invalid_argument("PFM expects a 2-D map, got " + depth.ShapeString());
  }
  const int h = depth.dim(0);
  const int w = depth.dim(1);
  std::string buf = "Pf\n" + std::to_string(w) + " " + std::to_string(h) + "\n-1.0\n";
  buf.reserve(buf.size() + 4 * depth.size());
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x) AppendF32(buf, depth.at(y, x));
  }
  auto out = OpenForWrite(path);
  Flush(out, buf, path);
}

Tensor ReadPfm(const std::filesystem::path& path) {
  const std::string buf = ReadWholeFile(path);
  HeaderReader hdr(buf);
  std::string magic, ws, hs, ss;
  if (!hdr.Token(&magic, false)) throw IoError(IoErrc::kMalformedHeader, "empty file");
  if (magic == "PF") {
    throw IoError(IoErrc::kMalformedHeader, "3-channel PF is not supported");
  }
  if (magic != "Pf") throw IoError(IoErrc::kMalformedHeader, "magic '" + magic + "'");
  long w = 0, h = 0;
  double scale = 0.0;
  if (!hdr.Token(&ws, false) || !hdr.Token(&hs, false) || !hdr.Token(&ss, false) ||
      !ParseInt(ws, &w) || !ParseInt(hs, &h) || !ParseDouble(ss, &scale) || w <= 0 ||
      h <= 0 || scale == 0.0 || !hdr.EndHeader()) {
    throw IoError(IoErrc::kMalformedHeader, path.string());
  }
  if (scale > 0.0) {
    throw IoError(IoErrc::kUnsupportedEndianness,
                  "big-endian PFM (scale " + ss + ") is not supported");
  }
  const size_t count = static_cast<size_t>(w) * static_cast<size_t>(h);
  if (buf.size() - hdr.pos() < 4 * count) throw IoError(IoErrc::kTruncated, path.string());
  Tensor out({static_cast<int>(h), static_cast<int>(w)});
  const char* p = buf.data() + hdr.pos();
  for (long y = h - 1; y >= 0; --y) {
    for (long x = 0; x < w; ++x, p += 4) out.at(static_cast<int>(y), static_cast<int>(x)) = LoadF32(p);
  }
  return out;
}

void WritePly(const PointCloud& cloud, const std::filesystem::path& path) {
  cloud.Validate();
  std::string buf =
      "ply\nformat binary_little_endian 1.0\nelement vertex " +
      std::to_string(cloud.size()) +
      "\nproperty float x\nproperty float y\nproperty float z\n"
      "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      "end_header\n";
  buf.reserve(buf.size() + 15 * cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) AppendF32(buf, cloud.points[i][k]);
    for (int k = 0; k < 3; ++k) buf.push_back(static_cast<char>(cloud.colors[i][k]));
  }
  auto out = OpenForWrite(path);
  Flush(out, buf, path);
}

namespace {

struct PlyProperty {
  std::string type;
  std::string name;
  int size = 0;
};

int PlyTypeSize(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "float" || type == "int32" ||
      type == "uint32" || type == "float32") {
    return 4;
  }
  if (type == "double" || type == "float64") return 8;
  return 0;
}

double PlyLoadBinary(const char* p, const std::string& type) {
  if (type == "uchar" || type == "uint8") return static_cast<unsigned char>(*p);
  if (type == "char" || type == "int8") return static_cast<signed char>(*p);
  if (type == "float" || type == "float32") return LoadF32(p);
  if (type == "int" || type == "int32") return static_cast<int32_t>(LoadU32(p));
  if (type == "uint" || type == "uint32") return LoadU32(p);
  if (type == "double" || type == "float64") {
    const uint64_t lo = LoadU32(p);
    const uint64_t hi = LoadU32(p + 4);
    return std::bit_cast<double>(lo | (hi << 32));
  }
  uint16_t v = static_cast<uint16_t>(static_cast<unsigned char>(p[0]) |
                                     (static_cast<unsigned char>(p[1]) << 8));
  if (type == "short" || type == "int16") return static_cast<int16_t>(v);
  return v;
}

}  // namespace

PointCloud ReadPly(const std::filesystem::path& path) {
  const std::string buf = ReadWholeFile(path);
  const size_t header_end = buf.find("end_header\n");
  if (buf.compare(0, 4, "ply\n") != 0) throw IoError(IoErrc::kBadMagic, path.string());
  if (header_end == std::string::npos) {
    throw IoError(IoErrc::kMalformedHeader, "no end_header in " + path.string());
  }
  std::istringstream header(buf.substr(0, header_end));
  std::string line;
  std::string format;
  long vertex_count = -1;
  bool in_vertex = false;
  bool vertex_seen = false;
  std::vector<PlyProperty> props;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      ls >> format;
    } else if (kw == "element") {
      std::string name;
      long n = 0;
      ls >> name >> n;
      if (vertex_seen && !in_vertex) continue;
      in_vertex = name == "vertex";
      if (in_vertex) {
        vertex_seen = true;
        vertex_count = n;
      } else if (!vertex_seen) {
        throw IoError(IoErrc::kMalformedHeader, "vertex must be the first element");
      }
    } else if (kw == "property" && in_vertex) {
      PlyProperty prop;
      ls >> prop.type;
      if (prop.type == "list") {
        throw IoError(IoErrc::kMalformedHeader, "list properties on vertices");
      }
      ls >> prop.name;
      prop.size = PlyTypeSize(prop.type);
      if (prop.size == 0) throw IoError(IoErrc::kMalformedHeader, "type " + prop.type);
      props.push_back(prop);
    }
  }
  if (vertex_count < 0) throw IoError(IoErrc::kMalformedHeader, "no vertex element");
  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  for (size_t i = 0; i < props.size(); ++i) {
    const auto& n = props[i].name;
    const int idx = static_cast<int>(i);
    if (n == "x") ix = idx;
    if (n == "y") iy = idx;
    if (n == "z") iz = idx;
    if (n == "red" || n == "r") ir = idx;
    if (n == "green" || n == "g") ig = idx;
    if (n == "blue" || n == "b") ib = idx;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw IoError(IoErrc::kMalformedHeader, "missing x/y/z");

  PointCloud cloud;
  cloud.points.resize(static_cast<size_t>(vertex_count));
  cloud.colors.assign(static_cast<size_t>(vertex_count), {255, 255, 255});
  std::vector<double> values(props.size());
  auto store = [&](size_t v) {
    cloud.points[v] = Eigen::Vector3f(static_cast<float>(values[ix]),
                                      static_cast<float>(values[iy]),
                                      static_cast<float>(values[iz]));
    if (ir >= 0 && ig >= 0 && ib >= 0) {
      cloud.colors[v] = {static_cast<uint8_t>(values[ir]), static_cast<uint8_t>(values[ig]),
                         static_cast<uint8_t>(values[ib])};
    }
  };
  const size_t payload = header_end + std::strlen("end_header\n");
  if (format == "binary_little_endian") {
    size_t stride = 0;
    for (const auto& p : props) stride += static_cast<size_t>(p.size);
    if (buf.size() - payload < stride * static_cast<size_t>(vertex_count)) {
      throw IoError(IoErrc::kTruncated, path.string());
    }
    const char* p = buf.data() + payload;
    for (size_t v = 0; v < static_cast<size_t>(vertex_count); ++v) {
      for (size_t k = 0; k < props.size(); ++k) {
        values[k] = PlyLoadBinary(p, props[k].type);
        p += props[k].size;
      }
      store(v);
    }
  } else if (format == "ascii") {
    std::istringstream body(buf.substr(payload));
    for (size_t v = 0; v < static_cast<size_t>(vertex_count); ++v) {
      for (size_t k = 0; k < props.size(); ++k) {
        if (!(body >> values[k])) throw IoError(IoErrc::kTruncated, path.string());
      }
      store(v);
    }
  } else {
    throw IoError(IoErrc::kUnsupportedEndianness, "PLY format '" + format + "'");
  }
  return cloud;
}

CameraFile ParseCam(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> tokens{std::istream_iterator<std::string>(in), {}};
  auto find = [&](const char* keyword) -> size_t {
    for (size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i] == keyword) return i;
    }
    throw IoError(IoErrc::kMissingSection, std::string("keyword '") + keyword + "'");
  };
  auto numbers = [&](size_t start, size_t count, const char* what) {
    std::vector<double> v(count);
    for (size_t i = 0; i < count; ++i) {
      if (start + i >= tokens.size()) {
        throw IoError(IoErrc::kMissingSection, std::string("incomplete ") + what);
      }
      if (!ParseDouble(tokens[start + i], &v[i]) || !std::isfinite(v[i])) {
        throw IoError(IoErrc::kInvalidValue,
                      std::string(what) + " entry '" + tokens[start + i] + "'");
      }
    }
    return v;
  };

  CameraFile cam;
  const size_t ext = find("extrinsic");
  const auto e = numbers(ext + 1, 16, "extrinsic");
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) cam.R(r, c) = e[r * 4 + c];
    cam.t[r] = e[r * 4 + 3];
  }
  const size_t intr = find("intrinsic");
  const auto k = numbers(intr + 1, 9, "intrinsic");
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) cam.K(r, c) = k[r * 3 + c];
  }
  if (intr + 10 + 4 > tokens.size()) {
    throw IoError(IoErrc::kMissingSection, "depth line 'd_min d_interval d_num d_max'");
  }
  const auto d = numbers(intr + 10, 4, "depth line");
  cam.d_min = d[0];
  cam.d_interval = d[1];
  cam.d_num = static_cast<int>(d[2]);
  cam.d_max = d[3];

  const Eigen::Matrix3d residual = cam.R * cam.R.transpose() - Eigen::Matrix3d::Identity();
  if (residual.cwiseAbs().maxCoeff() > 1e-4 || std::abs(cam.R.determinant() - 1.0) > 1e-4) {
    throw IoError(IoErrc::kNonOrthonormal, "extrinsic rotation");
  }
  if (cam.d_min <= 0.0) {
    throw IoError(IoErrc::kInvalidValue, "d_min must be positive");
  }
  if (cam.d_min >= cam.d_max) {
    throw IoError(IoErrc::kInvertedRange,
                  "d_min " + std::to_string(cam.d_min) + " >= d_max " + std::to_string(cam.d_max));
  }
  return cam;
}

CameraFile ReadCam(const std::filesystem::path& path) { return ParseCam(ReadWholeFile(path)); }

void WriteCam(const CameraFile& cam, const std::filesystem::path& path) {
  std::string s = "extrinsic\n";
  char num[64];
  auto put = [&](double v, char sep) {
    std::snprintf(num, sizeof(num), "%.17g%c", v, sep);
    s += num;
  };
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) put(cam.R(r, c), ' ');
    put(cam.t[r], '\n');
  }
  s += "0 0 0 1\n\nintrinsic\n";
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) put(cam.K(r, c), c == 2 ? '\n' : ' ');
  }
  s += "\n";
  put(cam.d_min, ' ');
  put(cam.d_interval, ' ');
  s += std::to_string(cam.d_num) + " ";
  put(cam.d_max, '\n');
  auto out = OpenForWrite(path);
  Flush(out, s, path);
}

Tensor ReadImage(const std::filesystem::path& path) {
  const std::string buf = ReadWholeFile(path);
  HeaderReader hdr(buf);
  std::string magic, ws, hs, ms;
  if (!hdr.Token(&magic, true) || (magic != "P5" && magic != "P6")) {
    throw IoError(IoErrc::kBadMagic, "expected P5 or P6 in " + path.string());
  }
  long w = 0, h = 0, maxval = 0;
  if (!hdr.Token(&ws, true) || !hdr.Token(&hs, true) || !hdr.Token(&ms, true) ||
      !ParseInt(ws, &w) || !ParseInt(hs, &h) || !ParseInt(ms, &maxval) || w <= 0 ||
      h <= 0 || maxval <= 0 || maxval > 255 || !hdr.EndHeader()) {
    throw IoError(IoErrc::kMalformedHeader, path.string());
  }
  const int channels = magic == "P6" ? 3 : 1;
  const size_t count = static_cast<size_t>(w) * static_cast<size_t>(h) * channels;
  if (buf.size() - hdr.pos() < count) throw IoError(IoErrc::kTruncated, path.string());
  Tensor img({static_cast<int>(h), static_cast<int>(w), 3});
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + hdr.pos());
  const float inv = 1.0f / static_cast<float>(maxval);
  for (size_t i = 0; i < static_cast<size_t>(w) * static_cast<size_t>(h); ++i) {
    for (int c = 0; c < 3; ++c) {
      img[3 * i + c] = static_cast<float>(p[i * channels + (channels == 3 ? c : 0)]) * inv;
    }
  }
  return img;
}

void WritePpm(const Tensor& image, const std::filesystem::path& path) {
  if (image.ndim() != 3 || image.dim(2) != 3) {
    throw std::invalid_argument("PPM expects H x W x 3, got " + image.ShapeString());
  }
  std::string buf = "P6\n" + std::to_string(image.dim(1)) + " " +
                    std::to_string(image.dim(0)) + "\n255\n";
  for (float v : image.data()) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    buf.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0f))));
  }
  auto out = OpenForWrite(path);
  Flush(out, buf, path);
}

}  // namespace mvsweep
