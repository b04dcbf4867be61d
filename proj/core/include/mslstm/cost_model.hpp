#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mslstm/architecture.hpp"

namespace mslstm {

struct CostInput {
  std::size_t batch = 1;
  std::size_t h = 64;
  std::size_t w = 64;
};

/// Activation multiplier per cell type: stored elements per step are
/// U~ * b * hidden * h_l * w_l.
struct CostOptions {
  std::uint64_t u_tilde_conv = 12;
  std::uint64_t u_tilde_multi_kernel = 26;
};

struct LayerCost {
  std::size_t layer = 0;
  CellKind kind = CellKind::kConv;
  std::size_t scale = 1;
  std::size_t h = 0;
  std::size_t w = 0;
  std::uint64_t weight_params = 0;  // enumerated
  std::uint64_t model_params = 0;   // closed form in terms of hidden only
  std::uint64_t bias_params = 0;
  std::uint64_t flops = 0;          // over all steps
  std::uint64_t m_out = 0;          // over all steps
};

struct CostReport {
  std::vector<LayerCost> layers;
  std::uint64_t params = 0;        // sum of cell weight_params
  std::uint64_t model_params = 0;  // sum of closed forms
  std::uint64_t head_params = 0;
  std::uint64_t head_flops = 0;
  std::uint64_t flops = 0;         // cells only, multiply-add = 2
  std::uint64_t m_par = 0;         // every trainable element
  std::uint64_t m_out = 0;
  std::uint64_t m_all = 0;         // 4 m_par + 2 m_out
  std::size_t steps = 0;

  std::string to_csv() const;
};

CostReport cost_report(const ArchitectureConfig& config, const CostInput& input, std::size_t steps,
                       const CostOptions& options = {});

// Closed forms: U c^2 k^2 (ConvLSTM, U = 8) and 9 c^2 (k_s^2 + k_l^2) + 2 c^2 (MK-LSTM).
std::uint64_t closed_form_cell_params(CellKind kind, std::size_t hidden, KernelSet kernels);

std::uint64_t count_params_exact(const Model& model);

}  // namespace mslstm
