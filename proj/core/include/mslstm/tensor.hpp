#pragma once

#include <cstddef>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mslstm {

/// Extent of a (batch, channels, rows, columns) tensor.
struct Shape {
  std::size_t b = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t size() const { return b * c * h * w; }
  std::size_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// 64-byte aligned storage whose elements stay uninitialized unless a value is
// given. Fixed alignment keeps vectorized reductions in the same order on every
// run, so results do not depend on where the allocator places a buffer.
template <typename T>
struct TensorAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  TensorAllocator() = default;
  template <typename U>
  TensorAllocator(const TensorAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

  template <typename U>
  void construct(U* p) {
    ::new (static_cast<void*>(p)) U;
  }
  template <typename U, typename... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
  template <typename U>
  bool operator==(const TensorAllocator<U>&) const {
    return true;
  }
};

using AlignedBuffer = std::vector<double, TensorAllocator<double>>;

/// Dense 64-bit tensor stored row-major in (b, c, h, w) order.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape) { return Tensor(shape, 0.0); }
  static Tensor full(Shape shape, double value) { return Tensor(shape, value); }
  static Tensor scalar(double value) { return Tensor(Shape{1, 1, 1, 1}, value); }
  // Contents are indeterminate; for outputs that are fully overwritten.
  static Tensor uninitialized(Shape shape);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }
  std::vector<double> vec() const { return {data_.begin(), data_.end()}; }

  std::size_t offset(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
    return ((b * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  double& at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) {
    return data_[offset(b, c, y, x)];
  }
  double at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[offset(b, c, y, x)];
  }

  // Pointer to the first element of plane (b, c).
  double* plane(std::size_t b, std::size_t c) { return data_.data() + offset(b, c, 0, 0); }
  const double* plane(std::size_t b, std::size_t c) const {
    return data_.data() + offset(b, c, 0, 0);
  }

  double item() const;
  bool all_finite() const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(double factor);

 private:
  Shape shape_;
  AlignedBuffer data_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

// Mean over every element; 0 for an empty tensor.
double mean(const Tensor& t);
double sum(const Tensor& t);
double max_abs(const Tensor& t);

/// Copy of batch items [first, first + count).
Tensor slice_batch(const Tensor& t, std::size_t first, std::size_t count);

}  // namespace mslstm
