#include "mslstm/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "mslstm/error.hpp"

namespace mslstm {

std::string Shape::str() const {
  return "(" + std::to_string(b) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " +
         std::to_string(w) + ")";
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

Tensor Tensor::uninitialized(Shape shape) {
  Tensor t;
  t.shape_ = shape;
  t.data_.resize(shape.size());
  return t;
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(shape), data_(data.begin(), data.end()) {
  if (data_.size() != shape_.size()) {
    fail(ErrorCode::kShape, "tensor data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_.str());
  }
}

double Tensor::item() const {
  if (data_.size() != 1) {
    fail(ErrorCode::kShape, "item() on non-scalar tensor " + shape_.str());
  }
  return data_[0];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor& Tensor::operator+=(const Tensor& other) {
  require_same_shape(*this, other, "+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double factor) {
  for (double& v : data_) v *= factor;
  return *this;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    fail(ErrorCode::kShape,
         std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  }
}

double sum(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s;
}

double mean(const Tensor& t) { return t.empty() ? 0.0 : sum(t) / static_cast<double>(t.size()); }

double max_abs(const Tensor& t) {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

Tensor slice_batch(const Tensor& t, std::size_t first, std::size_t count) {
  const Shape& s = t.shape();
  if (first + count > s.b) {
    fail(ErrorCode::kShape, "slice_batch: range exceeds batch of " + s.str());
  }
  const std::size_t item = s.c * s.h * s.w;
  std::vector<double> data(t.data().begin() + static_cast<std::ptrdiff_t>(first * item),
                           t.data().begin() + static_cast<std::ptrdiff_t>((first + count) * item));
  return Tensor(Shape{count, s.c, s.h, s.w}, std::move(data));
}

}  // namespace mslstm
