#include "senc/tensor.hpp"

#include <numeric>

#include "senc/error.hpp"

namespace senc {

namespace {

std::size_t checked_count(const std::vector<std::size_t>& shape) {
  if (shape.empty() || shape.size() > 4)
    throw error("tensor rank must be between 1 and 4, got " + std::to_string(shape.size()));
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

}  // namespace

tensor::tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  data_.assign(checked_count(shape_), 0.0);
}

tensor::tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (checked_count(shape_) != data_.size())
    throw error("tensor value count does not match shape");
}

std::size_t tensor::extent(std::size_t axis) const {
  if (axis >= shape_.size()) throw error("tensor axis out of range");
  return shape_[axis];
}

std::size_t tensor::offset2(std::size_t i0, std::size_t i1) const {
  if (rank() != 2 || i0 >= shape_[0] || i1 >= shape_[1]) throw error("tensor index out of range");
  return i0 * shape_[1] + i1;
}

std::size_t tensor::offset3(std::size_t i0, std::size_t i1, std::size_t i2) const {
  if (rank() != 3 || i0 >= shape_[0] || i1 >= shape_[1] || i2 >= shape_[2])
    throw error("tensor index out of range");
  return (i0 * shape_[1] + i1) * shape_[2] + i2;
}

std::size_t tensor::offset4(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) const {
  if (rank() != 4 || i0 >= shape_[0] || i1 >= shape_[1] || i2 >= shape_[2] || i3 >= shape_[3])
    throw error("tensor index out of range");
  return ((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3;
}

double& tensor::operator()(std::size_t i0, std::size_t i1) { return data_[offset2(i0, i1)]; }
double tensor::operator()(std::size_t i0, std::size_t i1) const { return data_[offset2(i0, i1)]; }
double& tensor::operator()(std::size_t i0, std::size_t i1, std::size_t i2) {
  return data_[offset3(i0, i1, i2)];
}
double tensor::operator()(std::size_t i0, std::size_t i1, std::size_t i2) const {
  return data_[offset3(i0, i1, i2)];
}
double& tensor::operator()(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) {
  return data_[offset4(i0, i1, i2, i3)];
}
double tensor::operator()(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) const {
  return data_[offset4(i0, i1, i2, i3)];
}

tensor tensor::reshaped(std::vector<std::size_t> new_shape) const {
  tensor out;
  out.shape_ = std::move(new_shape);
  if (checked_count(out.shape_) != data_.size())
    throw error("reshape changes element count");
  out.data_ = data_;
  return out;
}

}  // namespace senc
