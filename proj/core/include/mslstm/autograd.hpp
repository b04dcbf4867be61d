#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "mslstm/tensor.hpp"

namespace mslstm {

/// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t id = kNone;

  bool valid() const { return id != kNone; }
  bool operator==(const Var&) const = default;
};

/// Convolution weights (out, in, k, k) plus one bias per output channel.
/// Applied with stride 1, zero "same" padding of (k - 1) / 2, and the
/// cross-correlation convention.
struct ConvKernel {
  Tensor weight;
  Tensor bias;  // shape (1, out, 1, 1)

  static ConvKernel zeros(std::size_t in_channels, std::size_t out_channels, std::size_t k);

  std::size_t out_channels() const { return weight.shape().b; }
  std::size_t in_channels() const { return weight.shape().c; }
  std::size_t k() const { return weight.shape().h; }
  std::size_t weight_count() const { return weight.size(); }
  std::size_t parameter_count() const { return weight.size() + bias.size(); }

  // Throws config_error for even or non-square kernels, shape_error for a
  // bias of the wrong length.
  void validate() const;
};

/// A ConvKernel whose weight and bias live on a tape.
struct BoundKernel {
  Var weight;
  Var bias;
};

/// Records forward operations so that gradients can be replayed in reverse.
/// Single-owner; not safe to share between threads.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var constant(Tensor value);
  // Leaf whose gradient is tracked (a constant when gradients are disabled).
  Var variable(Tensor value);
  BoundKernel bind(const ConvKernel& kernel);
  BoundKernel bind_constant(const ConvKernel& kernel);

  const Tensor& value(Var v) const;
  const Shape& shape(Var v) const { return value(v).shape(); }
  bool requires_grad(Var v) const;
  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient accumulated into v by the last backward(); zeros when the value
  // was not reached.
  Tensor grad(Var v) const;

  // Reverse sweep from a scalar root. Throws usage_error if root is not a
  // scalar recorded on this tape.
  void backward(Var root);

  // Op-author interface.
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);
  Tensor& grad_buffer(Var v);
  void accumulate(Var v, Tensor g);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  const Node& node(Var v) const;
  Node& node(Var v);

  bool grad_enabled_;
  std::vector<Node> nodes_;
};

/// One output-channel block of a packed convolution: the sum of several
/// kernels, each reading a contiguous channel range of the input.
struct ConvTerm {
  BoundKernel kernel;
  std::size_t in_offset = 0;
};
struct ConvGroup {
  std::vector<ConvTerm> terms;
};

// The fixed op set. Elementwise ops need equal shapes; there is no broadcasting.
Var conv2d_same(Tape& tape, Var x, const BoundKernel& kernel);
// Stacks the groups along output channels. All kernels share size k.
Var conv2d_packed(Tape& tape, Var x, std::span<const ConvGroup> groups);
Var sigmoid(Tape& tape, Var x);
Var tanh(Tape& tape, Var x);
Var hadamard(Tape& tape, Var a, Var b);
Var add(Tape& tape, Var a, Var b);
Var concat_channels(Tape& tape, Var a, Var b);
Var slice_channels(Tape& tape, Var x, std::size_t first, std::size_t count);
Var maxpool2(Tape& tape, Var x);
Var upsample_bilinear2(Tape& tape, Var x);
Var sum(Tape& tape, Var x);
// sum(weights ⊙ x) with a constant weight tensor.
Var weighted_sum(Tape& tape, Var x, const Tensor& weights);

// Value-only forms for callers that need no gradients.
Tensor conv2d_same(const Tensor& x, const ConvKernel& kernel);
Tensor maxpool2(const Tensor& x);
Tensor upsample_bilinear2(const Tensor& x);

}  // namespace mslstm
