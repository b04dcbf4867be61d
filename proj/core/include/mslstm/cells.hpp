#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "mslstm/autograd.hpp"

namespace mslstm {

enum class CellKind { kConv, kMultiKernel };

std::string_view cell_kind_name(CellKind kind);

/// Gate order shared by both cell types: input, forget, modulation, output.
enum GateKernel : std::size_t { kIx, kIh, kFx, kFh, kGx, kGh, kOx, kOh, kOc };

inline constexpr std::array<std::string_view, 9> kGateKernelNames{
    "ix", "ih", "fx", "fh", "gx", "gh", "ox", "oh", "oc"};

/// ConvLSTM weights: x-kernels read the layer input, h-kernels read H_{t-1}.
struct ConvLSTMParams {
  std::array<ConvKernel, 8> kernels;

  std::size_t input_channels() const { return kernels[kIx].in_channels(); }
  std::size_t hidden() const { return kernels[kIx].out_channels(); }
  std::size_t k() const { return kernels[kIx].k(); }
};

/// Multi-kernel LSTM weights: a small-kernel branch driving C, a large-kernel
/// branch driving C~, both feeding a shared output gate, and a 1x1 fusion of
/// [C, C~] inside the final tanh.
struct MKLSTMParams {
  std::array<ConvKernel, 9> small;
  std::array<ConvKernel, 9> large;
  ConvKernel fuse;

  std::size_t input_channels() const { return small[kIx].in_channels(); }
  std::size_t hidden() const { return small[kIx].out_channels(); }
};

using CellParams = std::variant<ConvLSTMParams, MKLSTMParams>;

struct KernelSet {
  std::size_t small = 3;
  std::size_t large = 5;
};

/// Xavier-uniform weights, zero biases except the forget gate whose total
/// bias starts at 1 (carried by the x-side kernel).
CellParams init_params(CellKind kind, std::size_t in_channels, std::size_t hidden,
                       KernelSet kernels, std::uint64_t seed);
ConvLSTMParams init_convlstm(std::size_t in_channels, std::size_t hidden, std::size_t k,
                             std::uint64_t seed);
MKLSTMParams init_mklstm(std::size_t in_channels, std::size_t hidden, KernelSet kernels,
                         std::uint64_t seed);

// Visits every kernel with a stable name ("ix", "large.fh", "fuse", ...).
template <typename F>
void for_each_kernel(const CellParams& params, F&& fn) {
  if (const auto* p = std::get_if<ConvLSTMParams>(&params)) {
    for (std::size_t i = 0; i < p->kernels.size(); ++i) fn(std::string(kGateKernelNames[i]), p->kernels[i]);
  } else {
    const auto& m = std::get<MKLSTMParams>(params);
    for (std::size_t i = 0; i < m.small.size(); ++i) fn("small." + std::string(kGateKernelNames[i]), m.small[i]);
    for (std::size_t i = 0; i < m.large.size(); ++i) fn("large." + std::string(kGateKernelNames[i]), m.large[i]);
    fn(std::string("fuse"), m.fuse);
  }
}
template <typename F>
void for_each_kernel(CellParams& params, F&& fn) {
  if (auto* p = std::get_if<ConvLSTMParams>(&params)) {
    for (std::size_t i = 0; i < p->kernels.size(); ++i) fn(std::string(kGateKernelNames[i]), p->kernels[i]);
  } else {
    auto& m = std::get<MKLSTMParams>(params);
    for (std::size_t i = 0; i < m.small.size(); ++i) fn("small." + std::string(kGateKernelNames[i]), m.small[i]);
    for (std::size_t i = 0; i < m.large.size(); ++i) fn("large." + std::string(kGateKernelNames[i]), m.large[i]);
    fn(std::string("fuse"), m.fuse);
  }
}

// Weights only (no biases).
std::size_t cell_weight_count(const CellParams& params);
// Weights and biases.
std::size_t cell_parameter_count(const CellParams& params);

struct BoundConvLSTM {
  std::array<BoundKernel, 8> kernels;
  std::size_t input_channels = 0;
  std::size_t hidden = 0;
};

struct BoundMKLSTM {
  std::array<BoundKernel, 9> small;
  std::array<BoundKernel, 9> large;
  BoundKernel fuse;
  std::size_t input_channels = 0;
  std::size_t hidden = 0;
};

using BoundCell = std::variant<BoundConvLSTM, BoundMKLSTM>;

BoundConvLSTM bind(Tape& tape, const ConvLSTMParams& params);
BoundMKLSTM bind(Tape& tape, const MKLSTMParams& params);
BoundCell bind(Tape& tape, const CellParams& params);

struct ConvState {
  Var h;
  Var c;
};

struct MKState {
  Var h;
  Var c;
  Var c_tilde;
};

using CellState = std::variant<ConvState, MKState>;

struct ConvStep {
  Var h_out;
  ConvState state;
};

struct MKStep {
  Var h_out;
  MKState state;
};

ConvStep convlstm_step(Tape& tape, const BoundConvLSTM& cell, Var x, const ConvState& state);
MKStep mklstm_step(Tape& tape, const BoundMKLSTM& cell, Var x, const MKState& state);

// Dispatches on the cell type; returns the new hidden output and state.
std::pair<Var, CellState> cell_step(Tape& tape, const BoundCell& cell, Var x,
                                    const CellState& state);

CellState zero_state(Tape& tape, CellKind kind, std::size_t batch, std::size_t hidden,
                     std::size_t h, std::size_t w);

inline Var hidden_of(const CellState& s) {
  return std::visit([](const auto& st) { return st.h; }, s);
}

}  // namespace mslstm
