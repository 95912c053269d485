#include "wordspot/diff/array.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "wordspot/error.hpp"

namespace wordspot::diff {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(shape[i]);
  }
  return out.empty() ? "scalar" : out;
}

Array::Array(Shape shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {
  if (std::find(shape_.begin(), shape_.end(), std::size_t{0}) != shape_.end()) {
    throw Error(ErrorCode::kShapeMismatch,
                "zero extent in shape " + shape_string(shape_));
  }
}

Array::Array(Shape shape, std::span<const double> data)
    : Array(std::move(shape), Storage(data.begin(), data.end())) {}

Array::Array(Shape shape, Storage data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != element_count(shape_)) {
    throw Error(ErrorCode::kShapeMismatch,
                "data length " + std::to_string(data_.size()) +
                    " does not match shape " + shape_string(shape_));
  }
}

Array Array::vector(std::initializer_list<double> values) {
  return Array({values.size()}, Storage(values));
}

void Array::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Array Array::reshaped(Shape shape) const { return Array(std::move(shape), data_); }

}  // namespace wordspot::diff
