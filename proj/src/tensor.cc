#include "mvsweep/tensor.h"

#include <cstring>
#include <sstream>

namespace mvsweep {

size_t ShapeProduct(const Tensor::Shape& shape) {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  return n;
}

namespace {

void CheckShape(const Tensor::Shape& shape) {
  if (shape.empty() || shape.size() > 4) {
    throw std::invalid_argument("tensor must have 1 to 4 dimensions");
  }
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive");
  }
}

}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
  CheckShape(shape_);
  data_.assign(ShapeProduct(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  CheckShape(shape_);
  if (data_.size() != ShapeProduct(shape_)) {
    throw std::invalid_argument("tensor payload length does not match shape " +
                                ShapeString());
  }
}

bool Tensor::BitEquals(const Tensor& other) const {
  return shape_ == other.shape_ &&
         (data_.empty() || std::memcmp(data_.data(), other.data_.data(),
                                       data_.size() * sizeof(float)) == 0);
}

std::string Tensor::ShapeString() const {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

}  // namespace mvsweep
