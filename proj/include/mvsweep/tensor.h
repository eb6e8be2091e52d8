#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvsweep {

// Dense row-major float32 array with 1 to 4 dimensions.
class Tensor {
 public:
  using Shape = std::vector<int>;

  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  const Shape& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  float* raw() { return data_.data(); }
  const float* raw() const { return data_.data(); }

  float& operator[](size_t i) { return data_[i]; }
  float operator[](size_t i) const { return data_[i]; }

  float& at(int i, int j) { return data_[Offset(i, j)]; }
  float at(int i, int j) const { return data_[Offset(i, j)]; }
  float& at(int i, int j, int k) { return data_[Offset(i, j, k)]; }
  float at(int i, int j, int k) const { return data_[Offset(i, j, k)]; }
  float& at(int i, int j, int k, int l) { return data_[Offset(i, j, k, l)]; }
  float at(int i, int j, int k, int l) const { return data_[Offset(i, j, k, l)]; }

  // Bitwise equality of shape and payload (distinguishes -0.0 from 0.0).
  bool BitEquals(const Tensor& other) const;

  std::string ShapeString() const;

 private:
  size_t Offset(int i, int j) const {
    return static_cast<size_t>(i) * shape_[1] + j;
  }
  size_t Offset(int i, int j, int k) const {
    return (static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k;
  }
  size_t Offset(int i, int j, int k, int l) const {
    return ((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) *
               shape_[3] +
           l;
  }

  Shape shape_;
  std::vector<float> data_;
};

size_t ShapeProduct(const Tensor::Shape& shape);

}  // namespace mvsweep
