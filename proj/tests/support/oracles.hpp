#pragma once

// Straightforward loop implementations used as independent references.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mslstm/rng.hpp"
#include "mslstm/tensor.hpp"

namespace oracle {

using mslstm::Shape;
using mslstm::Tensor;

inline Tensor random_tensor(Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  mslstm::Rng rng(seed);
  Tensor t(s);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Same-padded cross-correlation, weight (out, in, k, k), bias of length out.
inline Tensor conv(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  const long pad = static_cast<long>(ws.h / 2);
  Tensor y(Shape{xs.b, ws.b, xs.h, xs.w});
  for (std::size_t n = 0; n < xs.b; ++n)
    for (std::size_t o = 0; o < ws.b; ++o)
      for (std::size_t r = 0; r < xs.h; ++r)
        for (std::size_t q = 0; q < xs.w; ++q) {
          double s = bias.data()[o];
          for (std::size_t c = 0; c < ws.c; ++c)
            for (std::size_t i = 0; i < ws.h; ++i)
              for (std::size_t j = 0; j < ws.w; ++j) {
                const long yy = static_cast<long>(r + i) - pad;
                const long xx = static_cast<long>(q + j) - pad;
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(xs.h) ||
                    xx >= static_cast<long>(xs.w))
                  continue;
                s += weight.at(o, c, i, j) * x.at(n, c, yy, xx);
              }
          y.at(n, o, r, q) = s;
        }
  return y;
}

template <typename F>
Tensor map(const Tensor& a, F f) {
  Tensor y(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) y.data()[i] = f(a.data()[i]);
  return y;
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
  Tensor y(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) y.data()[i] = f(a.data()[i], b.data()[i]);
  return y;
}

inline Tensor sigmoid(const Tensor& a) {
  return map(a, [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}
inline Tensor tanh(const Tensor& a) {
  return map(a, [](double v) { return std::tanh(v); });
}
inline Tensor mul(const Tensor& a, const Tensor& b) {
  return zip(a, b, [](double u, double v) { return u * v; });
}
inline Tensor plus(const Tensor& a, const Tensor& b) {
  return zip(a, b, [](double u, double v) { return u + v; });
}

inline Tensor concat(const Tensor& a, const Tensor& b) {
  const Shape sa = a.shape();
  const Shape sb = b.shape();
  Tensor y(Shape{sa.b, sa.c + sb.c, sa.h, sa.w});
  for (std::size_t n = 0; n < sa.b; ++n)
    for (std::size_t c = 0; c < sa.c + sb.c; ++c)
      for (std::size_t r = 0; r < sa.h; ++r)
        for (std::size_t q = 0; q < sa.w; ++q)
          y.at(n, c, r, q) = c < sa.c ? a.at(n, c, r, q) : b.at(n, c - sa.c, r, q);
  return y;
}

inline Tensor maxpool(const Tensor& x) {
  const Shape s = x.shape();
  Tensor y(Shape{s.b, s.c, s.h / 2, s.w / 2});
  for (std::size_t n = 0; n < s.b; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t r = 0; r < s.h / 2; ++r)
        for (std::size_t q = 0; q < s.w / 2; ++q)
          y.at(n, c, r, q) = std::max({x.at(n, c, 2 * r, 2 * q), x.at(n, c, 2 * r, 2 * q + 1),
                                       x.at(n, c, 2 * r + 1, 2 * q),
                                       x.at(n, c, 2 * r + 1, 2 * q + 1)});
  return y;
}

// Half-pixel bilinear 2x upsampling with edge clamping.
inline Tensor upsample(const Tensor& x) {
  const Shape s = x.shape();
  Tensor y(Shape{s.b, s.c, 2 * s.h, 2 * s.w});
  auto coord = [](std::size_t d, std::size_t n) {
    double v = (d + 0.5) / 2.0 - 0.5;
    return std::clamp(v, 0.0, static_cast<double>(n - 1));
  };
  for (std::size_t n = 0; n < s.b; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t r = 0; r < 2 * s.h; ++r)
        for (std::size_t q = 0; q < 2 * s.w; ++q) {
          const double sy = coord(r, s.h);
          const double sx = coord(q, s.w);
          const auto y0 = static_cast<std::size_t>(sy);
          const auto x0 = static_cast<std::size_t>(sx);
          const std::size_t y1 = std::min(y0 + 1, s.h - 1);
          const std::size_t x1 = std::min(x0 + 1, s.w - 1);
          const double fy = sy - y0;
          const double fx = sx - x0;
          y.at(n, c, r, q) = (1 - fy) * (1 - fx) * x.at(n, c, y0, x0) +
                             (1 - fy) * fx * x.at(n, c, y0, x1) +
                             fy * (1 - fx) * x.at(n, c, y1, x0) + fy * fx * x.at(n, c, y1, x1);
        }
  return y;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace oracle
