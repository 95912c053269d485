#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace wordspot::diff {

using Shape = std::vector<std::size_t>;

// Cache-line aligned storage. Vectorized reductions peel a scalar head up to
// the first aligned element, so a fixed base alignment keeps floating-point
// results independent of where the allocator placed the buffer.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlignment));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

  template <class U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) {
    return true;
  }
};

using Storage = std::vector<double, AlignedAllocator<double>>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. Images use the channels x height x width
// convention; vectors are one-dimensional.
class Array {
 public:
  Array() = default;
  explicit Array(Shape shape, double fill = 0.0);
  Array(Shape shape, Storage data);
  Array(Shape shape, std::span<const double> data);

  static Array vector(std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  Storage& storage() { return data_; }
  const Storage& storage() const { return data_; }
  std::vector<double> to_vector() const { return {data_.begin(), data_.end()}; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Indexing for rank-3 (C, H, W) arrays.
  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_[1] + y) * shape_[2] + x];
  }

  void fill(double value);
  // Same data, new shape; element counts must agree.
  Array reshaped(Shape shape) const;

  friend bool operator==(const Array&, const Array&) = default;

 private:
  Shape shape_;
  Storage data_;
};

}  // namespace wordspot::diff
