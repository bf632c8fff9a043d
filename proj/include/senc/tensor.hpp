#pragma once

#include <cstddef>
#include <vector>

namespace senc {

// Dense row-major tensor of doubles with at most four extents.
class tensor {
 public:
  tensor() = default;
  explicit tensor(std::vector<std::size_t> shape);
  tensor(std::vector<std::size_t> shape, std::vector<double> values);

  std::size_t rank() const { return shape_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t extent(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& operator()(std::size_t i0, std::size_t i1);
  double operator()(std::size_t i0, std::size_t i1) const;
  double& operator()(std::size_t i0, std::size_t i1, std::size_t i2);
  double operator()(std::size_t i0, std::size_t i1, std::size_t i2) const;
  double& operator()(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3);
  double operator()(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) const;

  // Same data, new extents; total element count must match.
  tensor reshaped(std::vector<std::size_t> new_shape) const;

 private:
  std::size_t offset2(std::size_t i0, std::size_t i1) const;
  std::size_t offset3(std::size_t i0, std::size_t i1, std::size_t i2) const;
  std::size_t offset4(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) const;

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace senc
