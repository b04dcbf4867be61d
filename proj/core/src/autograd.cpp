#include "mslstm/autograd.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "mslstm/error.hpp"
#include "mslstm/parallel.hpp"

namespace mslstm {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;
using ConstStrided = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
using MutStrided = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;

// Rows of `cols` are indexed by (c, ky, kx); columns by (y, x) for the output
// rows [y0, y1).
void im2col(const double* x, std::size_t channels, std::size_t h, std::size_t w, std::size_t k,
            std::size_t y0, std::size_t y1, double* cols) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto hh = static_cast<std::ptrdiff_t>(h);
  const auto ww = static_cast<std::ptrdiff_t>(w);
  const std::size_t n = (y1 - y0) * w;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* src = x + c * h * w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        double* dst = cols + ((c * k + ky) * k + kx) * n;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(ww, ww - dx);
        for (std::size_t y = y0; y < y1; ++y) {
          double* row = dst + (y - y0) * w;
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
          if (sy < 0 || sy >= hh || x1 <= x0) {
            std::fill(row, row + ww, 0.0);
            continue;
          }
          std::fill(row, row + x0, 0.0);
          std::copy(src + sy * ww + x0 + dx, src + sy * ww + x1 + dx, row + x0);
          std::fill(row + x1, row + ww, 0.0);
        }
      }
    }
  }
}

void col2im_add(const double* cols, std::size_t channels, std::size_t h, std::size_t w,
                std::size_t k, std::size_t y0, std::size_t y1, double* x) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto hh = static_cast<std::ptrdiff_t>(h);
  const auto ww = static_cast<std::ptrdiff_t>(w);
  const std::size_t n = (y1 - y0) * w;
  for (std::size_t c = 0; c < channels; ++c) {
    double* dst = x + c * h * w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const double* src = cols + ((c * k + ky) * k + kx) * n;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(ww, ww - dx);
        for (std::size_t y = y0; y < y1; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
          if (sy < 0 || sy >= hh) continue;
          const double* row = src + (y - y0) * w;
          double* out = dst + sy * ww + dx;
          for (std::ptrdiff_t xi = x0; xi < x1; ++xi) out[xi] += row[xi];
        }
      }
    }
  }
}

// Output rows per im2col band, sized so a band's columns stay cache resident.
std::size_t band_rows(std::size_t h, std::size_t w, std::size_t cols) {
  constexpr std::size_t kBandElements = 1 << 15;
  const std::size_t rows = kBandElements / std::max<std::size_t>(1, cols * w);
  return std::clamp<std::size_t>(rows, 1, h);
}

struct PackedLayout {
  std::size_t rows = 0;  // total output channels
  std::size_t k = 0;
  std::size_t cols = 0;  // in_channels * k * k
};

// Builds the (rows x cols) weight matrix and the per-row summed bias.
PackedLayout assemble(const Tape& tape, const Shape& xs, std::span<const ConvGroup> groups,
                      AlignedBuffer& weights, AlignedBuffer& bias) {
  PackedLayout layout;
  if (groups.empty() || groups.front().terms.empty()) {
    fail(ErrorCode::kConfig, "conv2d_packed: no kernels given");
  }
  layout.k = tape.shape(groups.front().terms.front().kernel.weight).h;
  for (const auto& g : groups) {
    if (g.terms.empty()) fail(ErrorCode::kConfig, "conv2d_packed: empty group");
    layout.rows += tape.shape(g.terms.front().kernel.weight).b;
  }
  const std::size_t k = layout.k;
  layout.cols = xs.c * k * k;
  weights.assign(layout.rows * layout.cols, 0.0);
  bias.assign(layout.rows, 0.0);
  std::size_t row0 = 0;
  for (const auto& g : groups) {
    const std::size_t out = tape.shape(g.terms.front().kernel.weight).b;
    for (const auto& term : g.terms) {
      const Tensor& wt = tape.value(term.kernel.weight);
      const Tensor& bt = tape.value(term.kernel.bias);
      const Shape& ws = wt.shape();
      if (ws.h != ws.w) fail(ErrorCode::kConfig, "conv kernel must be square, got " + ws.str());
      if (ws.h % 2 == 0) {
        fail(ErrorCode::kConfig, "conv kernel size must be odd, got " + std::to_string(ws.h));
      }
      if (ws.h != k) fail(ErrorCode::kConfig, "conv2d_packed: mixed kernel sizes");
      if (ws.b != out) fail(ErrorCode::kShape, "conv2d_packed: group output channels differ");
      if (term.in_offset + ws.c > xs.c) {
        fail(ErrorCode::kShape, "conv: kernel expects " + std::to_string(ws.c) +
                                    " input channels at offset " + std::to_string(term.in_offset) +
                                    " but input has " + std::to_string(xs.c));
      }
      if (bt.size() != out) {
        fail(ErrorCode::kShape, "conv: bias length " + std::to_string(bt.size()) +
                                    " does not match " + std::to_string(out) + " output channels");
      }
      const std::size_t span = ws.c * k * k;
      for (std::size_t o = 0; o < out; ++o) {
        const double* src = wt.data().data() + o * span;
        double* dst = weights.data() + (row0 + o) * layout.cols + term.in_offset * k * k;
        for (std::size_t j = 0; j < span; ++j) dst[j] += src[j];
        bias[row0 + o] += bt.data()[o];
      }
    }
    row0 += out;
  }
  return layout;
}

Tensor packed_forward(const Tensor& x, const PackedLayout& layout,
                      const AlignedBuffer& weights, const AlignedBuffer& bias) {
  const Shape& xs = x.shape();
  const std::size_t hw = xs.plane();
  Tensor y = Tensor::uninitialized(Shape{xs.b, layout.rows, xs.h, xs.w});
  ConstMap wm(weights.data(), static_cast<Eigen::Index>(layout.rows),
              static_cast<Eigen::Index>(layout.cols));
  const auto rows = static_cast<Eigen::Index>(layout.rows);
  const auto ld = static_cast<Eigen::Index>(hw);
  parallel_for(xs.b, [&](std::size_t b) {
    if (layout.k == 1) {
      ConstMap cm(x.plane(b, 0), static_cast<Eigen::Index>(layout.cols), ld);
      MutMap ym(y.plane(b, 0), rows, ld);
      ym.noalias() = wm * cm;
    } else {
      const std::size_t band = band_rows(xs.h, xs.w, layout.cols);
      AlignedBuffer scratch(layout.cols * band * xs.w);
      for (std::size_t y0 = 0; y0 < xs.h; y0 += band) {
        const std::size_t y1 = std::min(xs.h, y0 + band);
        const auto n = static_cast<Eigen::Index>((y1 - y0) * xs.w);
        im2col(x.plane(b, 0), xs.c, xs.h, xs.w, layout.k, y0, y1, scratch.data());
        ConstMap cm(scratch.data(), static_cast<Eigen::Index>(layout.cols), n);
        MutStrided ym(y.plane(b, 0) + y0 * xs.w, rows, n, Eigen::OuterStride<>(ld));
        ym.noalias() = wm * cm;
      }
    }
    for (std::size_t r = 0; r < layout.rows; ++r) {
      double* row = y.plane(b, r);
      for (std::size_t i = 0; i < hw; ++i) row[i] += bias[r];
    }
  });
  return y;
}

void check_same(const Tape& tape, Var a, Var b, const char* op) {
  require_same_shape(tape.value(a), tape.value(b), op);
}

using ArrayMap = Eigen::Map<Eigen::ArrayXd>;
using ConstArrayMap = Eigen::Map<const Eigen::ArrayXd>;

// Vectorized exp keeps both activations cheap; 1 / (1 + inf) = 0 handles the
// overflow side of the sigmoid.
Tensor sigmoid_values(const Tensor& x) {
  Tensor y = Tensor::uninitialized(x.shape());
  const auto n = static_cast<Eigen::Index>(x.size());
  ArrayMap(y.data().data(), n) = 1.0 / (1.0 + (-ConstArrayMap(x.data().data(), n)).exp());
  return y;
}

// tanh|x| = (1 - e) / (1 + e) with e = exp(-2|x|); a Taylor series near zero
// avoids the cancellation in 1 - e.
Tensor tanh_values(const Tensor& x) {
  Tensor y = Tensor::uninitialized(x.shape());
  const auto n = static_cast<Eigen::Index>(x.size());
  const ConstArrayMap xv(x.data().data(), n);
  const Eigen::ArrayXd a = xv.abs();
  const Eigen::ArrayXd e = (-2.0 * a).exp();
  const Eigen::ArrayXd x2 = a * a;
  const Eigen::ArrayXd series =
      a * (1.0 + x2 * (-1.0 / 3.0 + x2 * (2.0 / 15.0 + x2 * (-17.0 / 315.0 + x2 * (62.0 / 2835.0)))));
  const Eigen::ArrayXd t = (a < 0.05).select(series, (1.0 - e) / (1.0 + e));
  ArrayMap(y.data().data(), n) = (xv < 0.0).select(-t, t);
  return y;
}

Tensor product(const Tensor& a, const Tensor& b) {
  Tensor y = Tensor::uninitialized(a.shape());
  const double* av = a.data().data();
  const double* bv = b.data().data();
  double* out = y.data().data();
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = av[i] * bv[i];
  return y;
}

struct Taps {
  std::vector<std::size_t> lo, hi;
  AlignedBuffer frac;
};

// Half-pixel source coordinates for a 2x upsample of an axis of length n.
Taps bilinear_taps(std::size_t n) {
  Taps t;
  const std::size_t out = 2 * n;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  for (std::size_t d = 0; d < out; ++d) {
    double s = (static_cast<double>(d) + 0.5) / 2.0 - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(n - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(s));
    t.lo[d] = i0;
    t.hi[d] = std::min(i0 + 1, n - 1);
    t.frac[d] = s - static_cast<double>(i0);
  }
  return t;
}

}  // namespace

ConvKernel ConvKernel::zeros(std::size_t in_channels, std::size_t out_channels, std::size_t k) {
  ConvKernel kern{Tensor(Shape{out_channels, in_channels, k, k}),
                  Tensor(Shape{1, out_channels, 1, 1})};
  kern.validate();
  return kern;
}

void ConvKernel::validate() const {
  const Shape& s = weight.shape();
  if (s.h != s.w) fail(ErrorCode::kConfig, "conv kernel must be square, got " + s.str());
  if (s.h % 2 == 0) {
    fail(ErrorCode::kConfig, "conv kernel size must be odd, got " + std::to_string(s.h));
  }
  if (s.b == 0 || s.c == 0) fail(ErrorCode::kConfig, "conv kernel has zero channels");
  if (bias.size() != s.b) {
    fail(ErrorCode::kShape, "conv bias length " + std::to_string(bias.size()) +
                                " does not match " + std::to_string(s.b) + " output channels");
  }
}

// ---------------------------------------------------------------------------
// Tape

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), false, false, {}});
  return Var{nodes_.size() - 1};
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), grad_enabled_, false, {}});
  return Var{nodes_.size() - 1};
}

BoundKernel Tape::bind(const ConvKernel& kernel) {
  kernel.validate();
  return BoundKernel{variable(kernel.weight), variable(kernel.bias)};
}

BoundKernel Tape::bind_constant(const ConvKernel& kernel) {
  kernel.validate();
  return BoundKernel{constant(kernel.weight), constant(kernel.bias)};
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) {
    fail(ErrorCode::kUsage, "value is not recorded on this tape");
  }
  return nodes_[v.id];
}

Tape::Node& Tape::node(Var v) {
  if (!v.valid() || v.id >= nodes_.size()) {
    fail(ErrorCode::kUsage, "value is not recorded on this tape");
  }
  return nodes_[v.id];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

Tensor Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.has_grad) return n.grad;
  return Tensor::zeros(n.value.shape());
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  bool needs = false;
  if (grad_enabled_) {
    for (Var in : inputs) needs = needs || node(in).requires_grad;
  }
  nodes_.push_back(Node{std::move(value), Tensor(), needs, false,
                        needs ? std::move(backward) : BackwardFn{}});
  return Var{nodes_.size() - 1};
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = node(v);
  if (!n.has_grad) {
    n.grad = Tensor::zeros(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(Var v, Tensor g) {
  Node& n = node(v);
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    require_same_shape(n.value, g, "gradient");
    n.grad = std::move(g);
    n.has_grad = true;
    return;
  }
  n.grad += g;
}

void Tape::backward(Var root) {
  const Node& r = node(root);
  if (r.value.size() != 1) {
    fail(ErrorCode::kUsage, "backward root must be a scalar, got " + r.value.shape().str());
  }
  for (Node& n : nodes_) {
    n.grad = Tensor();
    n.has_grad = false;
  }
  if (!r.requires_grad) return;
  grad_buffer(root).data()[0] = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

// ---------------------------------------------------------------------------
// Ops

Var conv2d_packed(Tape& tape, Var x, std::span<const ConvGroup> groups) {
  const Tensor& xv = tape.value(x);
  auto weights = std::make_shared<AlignedBuffer>();
  auto bias = std::make_shared<AlignedBuffer>();
  const PackedLayout layout = assemble(tape, xv.shape(), groups, *weights, *bias);
  Tensor y = packed_forward(xv, layout, *weights, *bias);

  std::vector<Var> inputs{x};
  for (const auto& g : groups) {
    for (const auto& t : g.terms) {
      inputs.push_back(t.kernel.weight);
      inputs.push_back(t.kernel.bias);
    }
  }
  std::vector<ConvGroup> saved(groups.begin(), groups.end());
  return tape.record(std::move(y), inputs, [x, saved, layout, weights](Tape& tp, const Tensor& gy) {
    const Tensor& xv = tp.value(x);
    const Shape& xs = xv.shape();
    const std::size_t hw = xs.plane();
    const bool want_x = tp.requires_grad(x);
    const std::size_t wsize = layout.rows * layout.cols;
    AlignedBuffer dw(xs.b * wsize, 0.0);
    Tensor dx;
    if (want_x) dx = Tensor::zeros(xs);
    ConstMap wm(weights->data(), static_cast<Eigen::Index>(layout.rows),
                static_cast<Eigen::Index>(layout.cols));
    const auto rows = static_cast<Eigen::Index>(layout.rows);
    const auto ncols = static_cast<Eigen::Index>(layout.cols);
    const auto ld = static_cast<Eigen::Index>(hw);
    parallel_for(xs.b, [&](std::size_t b) {
      MutMap dwm(dw.data() + b * wsize, rows, ncols);
      if (layout.k == 1) {
        ConstMap cm(xv.plane(b, 0), ncols, ld);
        ConstMap gm(gy.plane(b, 0), rows, ld);
        dwm.noalias() = gm * cm.transpose();
        if (want_x) {
          MutMap dxm(dx.plane(b, 0), ncols, ld);
          dxm.noalias() = wm.transpose() * gm;
        }
        return;
      }
      const std::size_t band = band_rows(xs.h, xs.w, layout.cols);
      AlignedBuffer scratch(layout.cols * band * xs.w);
      AlignedBuffer dcols(want_x ? scratch.size() : 0);
      for (std::size_t y0 = 0; y0 < xs.h; y0 += band) {
        const std::size_t y1 = std::min(xs.h, y0 + band);
        const auto n = static_cast<Eigen::Index>((y1 - y0) * xs.w);
        im2col(xv.plane(b, 0), xs.c, xs.h, xs.w, layout.k, y0, y1, scratch.data());
        ConstMap cm(scratch.data(), ncols, n);
        ConstStrided gm(gy.plane(b, 0) + y0 * xs.w, rows, n, Eigen::OuterStride<>(ld));
        dwm.noalias() += gm * cm.transpose();
        if (!want_x) continue;
        MutMap dcm(dcols.data(), ncols, n);
        dcm.noalias() = wm.transpose() * gm;
        col2im_add(dcols.data(), xs.c, xs.h, xs.w, layout.k, y0, y1, dx.plane(b, 0));
      }
    });
    // Fixed-order reduction over the batch.
    for (std::size_t b = 1; b < xs.b; ++b) {
      const double* src = dw.data() + b * wsize;
      for (std::size_t i = 0; i < wsize; ++i) dw[i] += src[i];
    }
    AlignedBuffer db(layout.rows, 0.0);
    for (std::size_t b = 0; b < xs.b; ++b) {
      for (std::size_t r = 0; r < layout.rows; ++r) {
        const double* row = gy.plane(b, r);
        double s = 0.0;
        for (std::size_t i = 0; i < hw; ++i) s += row[i];
        db[r] += s;
      }
    }
    if (want_x) tp.accumulate(x, std::move(dx));

    const std::size_t k = layout.k;
    std::size_t row0 = 0;
    for (const auto& g : saved) {
      const std::size_t out = tp.shape(g.terms.front().kernel.weight).b;
      for (const auto& term : g.terms) {
        if (tp.requires_grad(term.kernel.weight)) {
          Tensor& gw = tp.grad_buffer(term.kernel.weight);
          const std::size_t span = gw.shape().c * k * k;
          for (std::size_t o = 0; o < out; ++o) {
            const double* src = dw.data() + (row0 + o) * layout.cols + term.in_offset * k * k;
            double* dst = gw.data().data() + o * span;
            for (std::size_t j = 0; j < span; ++j) dst[j] += src[j];
          }
        }
        if (tp.requires_grad(term.kernel.bias)) {
          Tensor& gb = tp.grad_buffer(term.kernel.bias);
          for (std::size_t o = 0; o < out; ++o) gb.data()[o] += db[row0 + o];
        }
      }
      row0 += out;
    }
  });
}

Var conv2d_same(Tape& tape, Var x, const BoundKernel& kernel) {
  const Shape& ws = tape.shape(kernel.weight);
  if (ws.h != ws.w || ws.h % 2 == 0) {
    fail(ErrorCode::kConfig, "conv kernel size must be odd and square, got " + ws.str());
  }
  if (tape.shape(x).c != ws.c) {
    fail(ErrorCode::kShape, "conv2d_same: input has " + std::to_string(tape.shape(x).c) +
                                " channels, kernel expects " + std::to_string(ws.c));
  }
  const std::array<ConvGroup, 1> groups{ConvGroup{{ConvTerm{kernel, 0}}}};
  return conv2d_packed(tape, x, groups);
}

Tensor conv2d_same(const Tensor& x, const ConvKernel& kernel) {
  Tape tape(false);
  const Var xv = tape.constant(x);
  const Var y = conv2d_same(tape, xv, tape.bind_constant(kernel));
  return tape.value(y);
}

Var sigmoid(Tape& tape, Var x) {
  Tensor y = sigmoid_values(tape.value(x));
  return tape.record(std::move(y), std::array{x}, [x, self = tape.size()](Tape& tp, const Tensor& g) {
    const Tensor& s = tp.value(Var{self});
    Tensor dx = Tensor::uninitialized(s.shape());
    const double* sv = s.data().data();
    const double* gv = g.data().data();
    double* out = dx.data().data();
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = gv[i] * sv[i] * (1.0 - sv[i]);
    tp.accumulate(x, std::move(dx));
  });
}

Var tanh(Tape& tape, Var x) {
  Tensor y = tanh_values(tape.value(x));
  return tape.record(std::move(y), std::array{x}, [x, self = tape.size()](Tape& tp, const Tensor& g) {
    const Tensor& t = tp.value(Var{self});
    Tensor dx = Tensor::uninitialized(t.shape());
    const double* tv = t.data().data();
    const double* gv = g.data().data();
    double* out = dx.data().data();
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = gv[i] * (1.0 - tv[i] * tv[i]);
    tp.accumulate(x, std::move(dx));
  });
}

Var hadamard(Tape& tape, Var a, Var b) {
  check_same(tape, a, b, "hadamard");
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  Tensor y = product(av, bv);
  return tape.record(std::move(y), std::array{a, b}, [a, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, product(g, tp.value(b)));
    if (tp.requires_grad(b)) tp.accumulate(b, product(g, tp.value(a)));
  });
}

Var add(Tape& tape, Var a, Var b) {
  check_same(tape, a, b, "add");
  Tensor y = tape.value(a);
  y += tape.value(b);
  return tape.record(std::move(y), std::array{a, b}, [a, b](Tape& tp, const Tensor& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var concat_channels(Tape& tape, Var a, Var b) {
  const Shape sa = tape.shape(a);
  const Shape sb = tape.shape(b);
  if (sa.b != sb.b || sa.h != sb.h || sa.w != sb.w) {
    fail(ErrorCode::kShape, "concat_channels: incompatible shapes " + sa.str() + " and " + sb.str());
  }
  Tensor y = Tensor::uninitialized(Shape{sa.b, sa.c + sb.c, sa.h, sa.w});
  const std::size_t hw = sa.plane();
  for (std::size_t n = 0; n < sa.b; ++n) {
    std::copy_n(tape.value(a).plane(n, 0), sa.c * hw, y.plane(n, 0));
    std::copy_n(tape.value(b).plane(n, 0), sb.c * hw, y.plane(n, sa.c));
  }
  return tape.record(std::move(y), std::array{a, b}, [a, b, sa, sb](Tape& tp, const Tensor& g) {
    const std::size_t hw = sa.plane();
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad_buffer(a);
      for (std::size_t n = 0; n < sa.b; ++n) {
        const double* src = g.plane(n, 0);
        double* dst = ga.plane(n, 0);
        for (std::size_t i = 0; i < sa.c * hw; ++i) dst[i] += src[i];
      }
    }
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad_buffer(b);
      for (std::size_t n = 0; n < sb.b; ++n) {
        const double* src = g.plane(n, sa.c);
        double* dst = gb.plane(n, 0);
        for (std::size_t i = 0; i < sb.c * hw; ++i) dst[i] += src[i];
      }
    }
  });
}

Var slice_channels(Tape& tape, Var x, std::size_t first, std::size_t count) {
  const Shape xs = tape.shape(x);
  if (first + count > xs.c || count == 0) {
    fail(ErrorCode::kShape, "slice_channels: [" + std::to_string(first) + ", " +
                                std::to_string(first + count) + ") outside " + xs.str());
  }
  Tensor y = Tensor::uninitialized(Shape{xs.b, count, xs.h, xs.w});
  const std::size_t hw = xs.plane();
  for (std::size_t n = 0; n < xs.b; ++n) {
    std::copy_n(tape.value(x).plane(n, first), count * hw, y.plane(n, 0));
  }
  return tape.record(std::move(y), std::array{x}, [x, xs, first, count](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x);
    const std::size_t hw = xs.plane();
    for (std::size_t n = 0; n < xs.b; ++n) {
      const double* src = g.plane(n, 0);
      double* dst = gx.plane(n, first);
      for (std::size_t i = 0; i < count * hw; ++i) dst[i] += src[i];
    }
  });
}

namespace {

// Output values plus, for every output element, the flat input index of the
// window maximum (first in row-major scan on ties).
Tensor maxpool_with_index(const Tensor& x, std::vector<std::size_t>* argmax) {
  const Shape& s = x.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    fail(ErrorCode::kShape, "maxpool2 needs even height and width, got " + s.str());
  }
  Tensor y = Tensor::uninitialized(Shape{s.b, s.c, s.h / 2, s.w / 2});
  if (argmax) argmax->resize(y.size());
  std::size_t out = 0;
  for (std::size_t n = 0; n < s.b; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      for (std::size_t oy = 0; oy < s.h / 2; ++oy) {
        for (std::size_t ox = 0; ox < s.w / 2; ++ox, ++out) {
          std::size_t best = x.offset(n, c, 2 * oy, 2 * ox);
          for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t idx = x.offset(n, c, 2 * oy + dy, 2 * ox + dx);
              if (x.data()[idx] > x.data()[best]) best = idx;
            }
          }
          y.data()[out] = x.data()[best];
          if (argmax) (*argmax)[out] = best;
        }
      }
    }
  }
  return y;
}

Tensor upsample_values(const Tensor& x, const Taps& ty, const Taps& tx) {
  const Shape& s = x.shape();
  Tensor y = Tensor::uninitialized(Shape{s.b, s.c, 2 * s.h, 2 * s.w});
  for (std::size_t n = 0; n < s.b; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const double* src = x.plane(n, c);
      double* dst = y.plane(n, c);
      for (std::size_t oy = 0; oy < 2 * s.h; ++oy) {
        const double fy = ty.frac[oy];
        const double* r0 = src + ty.lo[oy] * s.w;
        const double* r1 = src + ty.hi[oy] * s.w;
        for (std::size_t ox = 0; ox < 2 * s.w; ++ox) {
          const double fx = tx.frac[ox];
          const double top = (1.0 - fx) * r0[tx.lo[ox]] + fx * r0[tx.hi[ox]];
          const double bot = (1.0 - fx) * r1[tx.lo[ox]] + fx * r1[tx.hi[ox]];
          dst[oy * 2 * s.w + ox] = (1.0 - fy) * top + fy * bot;
        }
      }
    }
  }
  return y;
}

}  // namespace

Tensor maxpool2(const Tensor& x) { return maxpool_with_index(x, nullptr); }

Var maxpool2(Tape& tape, Var x) {
  std::vector<std::size_t> argmax;
  Tensor y = maxpool_with_index(tape.value(x), &argmax);
  return tape.record(std::move(y), std::array{x}, [x, argmax](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x);
    for (std::size_t i = 0; i < argmax.size(); ++i) gx.data()[argmax[i]] += g.data()[i];
  });
}

Tensor upsample_bilinear2(const Tensor& x) {
  const Shape& s = x.shape();
  return upsample_values(x, bilinear_taps(s.h), bilinear_taps(s.w));
}

Var upsample_bilinear2(Tape& tape, Var x) {
  const Shape s = tape.shape(x);
  Taps ty = bilinear_taps(s.h);
  Taps tx = bilinear_taps(s.w);
  Tensor y = upsample_values(tape.value(x), ty, tx);
  return tape.record(std::move(y), std::array{x}, [x, s, ty, tx](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad_buffer(x);
    for (std::size_t n = 0; n < s.b; ++n) {
      for (std::size_t c = 0; c < s.c; ++c) {
        const double* src = g.plane(n, c);
        double* dst = gx.plane(n, c);
        for (std::size_t oy = 0; oy < 2 * s.h; ++oy) {
          const double fy = ty.frac[oy];
          double* r0 = dst + ty.lo[oy] * s.w;
          double* r1 = dst + ty.hi[oy] * s.w;
          for (std::size_t ox = 0; ox < 2 * s.w; ++ox) {
            const double v = src[oy * 2 * s.w + ox];
            const double fx = tx.frac[ox];
            r0[tx.lo[ox]] += (1.0 - fy) * (1.0 - fx) * v;
            r0[tx.hi[ox]] += (1.0 - fy) * fx * v;
            r1[tx.lo[ox]] += fy * (1.0 - fx) * v;
            r1[tx.hi[ox]] += fy * fx * v;
          }
        }
      }
    }
  });
}

Var sum(Tape& tape, Var x) {
  return tape.record(Tensor::scalar(mslstm::sum(tape.value(x))), std::array{x},
                     [x](Tape& tp, const Tensor& g) {
                       tp.accumulate(x, Tensor::full(tp.shape(x), g.item()));
                     });
}

Var weighted_sum(Tape& tape, Var x, const Tensor& weights) {
  const Tensor& xv = tape.value(x);
  require_same_shape(xv, weights, "weighted_sum");
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv.data()[i] * weights.data()[i];
  return tape.record(Tensor::scalar(s), std::array{x}, [x, weights](Tape& tp, const Tensor& g) {
    Tensor gx = weights;
    gx *= g.item();
    tp.accumulate(x, std::move(gx));
  });
}

}  // namespace mslstm
