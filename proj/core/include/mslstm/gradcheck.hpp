#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mslstm/autograd.hpp"

namespace mslstm {

// Returns f(point); when `grad` is non-null also writes the analytic gradient.
using ValueAndGrad = std::function<double(std::span<const double> point, std::vector<double>* grad)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares the analytic gradient with central differences, coordinate by
/// coordinate: |analytic - numeric| / max(1e-12, |numeric|), maximised.
GradCheckResult finite_diff_check(const ValueAndGrad& f, std::span<const double> point,
                                  double eps = 1e-5);

// Builds a scalar on a fresh tape from variables holding `inputs`.
using TapeFunction = std::function<Var(Tape&, std::span<const Var>)>;

/// finite_diff_check over every element of every input tensor.
GradCheckResult check_tape_gradients(const TapeFunction& fn, const std::vector<Tensor>& inputs,
                                     double eps = 1e-5);

}  // namespace mslstm
