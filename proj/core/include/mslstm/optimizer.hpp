#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mslstm/tensor.hpp"

namespace mslstm {

struct AdamOptions {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;

  // Zero moments shaped like each parameter.
  static AdamState like(std::span<Tensor* const> params);
};

/// One bias-corrected Adam update in place. Throws shape_error when grads or
/// moments do not match the parameters.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               const AdamOptions& options);

}  // namespace mslstm
