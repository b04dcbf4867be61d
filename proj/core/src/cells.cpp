#include "mslstm/cells.hpp"

#include <cmath>
#include <string>

#include "mslstm/error.hpp"
#include "mslstm/rng.hpp"

namespace mslstm {
namespace {

ConvKernel xavier_kernel(std::size_t in, std::size_t out, std::size_t k, Rng& rng) {
  ConvKernel kern = ConvKernel::zeros(in, out, k);
  const double fan_in = static_cast<double>(in * k * k);
  const double fan_out = static_cast<double>(out * k * k);
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : kern.weight.data()) v = rng.uniform(-a, a);
  return kern;
}

void check_odd(std::size_t k) {
  if (k == 0 || k % 2 == 0) {
    fail(ErrorCode::kConfig, "kernel size must be odd, got " + std::to_string(k));
  }
}

void check_step_shapes(const Tape& tape, Var x, Var h, std::size_t in_channels,
                       std::size_t hidden, const char* who) {
  const Shape& xs = tape.shape(x);
  const Shape& hs = tape.shape(h);
  if (xs.c != in_channels) {
    fail(ErrorCode::kShape, std::string(who) + ": input has " + std::to_string(xs.c) +
                                " channels, cell expects " + std::to_string(in_channels));
  }
  if (hs.c != hidden) {
    fail(ErrorCode::kShape, std::string(who) + ": state has " + std::to_string(hs.c) +
                                " channels, cell expects " + std::to_string(hidden));
  }
  if (xs.b != hs.b || xs.h != hs.h || xs.w != hs.w) {
    fail(ErrorCode::kShape,
         std::string(who) + ": input " + xs.str() + " does not match state " + hs.str());
  }
}

// Four gate groups (i, f, g, o) over the channel-concatenation [x, h].
std::array<ConvGroup, 4> gate_groups(const std::array<BoundKernel, 9>& k, std::size_t in) {
  return {ConvGroup{{ConvTerm{k[kIx], 0}, ConvTerm{k[kIh], in}}},
          ConvGroup{{ConvTerm{k[kFx], 0}, ConvTerm{k[kFh], in}}},
          ConvGroup{{ConvTerm{k[kGx], 0}, ConvTerm{k[kGh], in}}},
          ConvGroup{{ConvTerm{k[kOx], 0}, ConvTerm{k[kOh], in}}}};
}

}  // namespace

std::string_view cell_kind_name(CellKind kind) {
  return kind == CellKind::kConv ? "conv" : "multikernel";
}

ConvLSTMParams init_convlstm(std::size_t in_channels, std::size_t hidden, std::size_t k,
                             std::uint64_t seed) {
  check_odd(k);
  if (in_channels == 0 || hidden == 0) fail(ErrorCode::kConfig, "cell channels must be positive");
  Rng rng(seed);
  ConvLSTMParams p;
  for (std::size_t i = 0; i < p.kernels.size(); ++i) {
    const bool x_side = i % 2 == 0;
    p.kernels[i] = xavier_kernel(x_side ? in_channels : hidden, hidden, k, rng);
  }
  for (double& b : p.kernels[kFx].bias.data()) b = 1.0;
  return p;
}

MKLSTMParams init_mklstm(std::size_t in_channels, std::size_t hidden, KernelSet kernels,
                         std::uint64_t seed) {
  check_odd(kernels.small);
  check_odd(kernels.large);
  if (in_channels == 0 || hidden == 0) fail(ErrorCode::kConfig, "cell channels must be positive");
  Rng rng(seed);
  MKLSTMParams p;
  auto fill = [&](std::array<ConvKernel, 9>& set, std::size_t k) {
    for (std::size_t i = 0; i < set.size(); ++i) {
      // ix, fx, gx, ox read the input; ih.. read H; oc reads the cell state.
      const std::size_t in = (i % 2 == 0 && i != kOc) ? in_channels : hidden;
      set[i] = xavier_kernel(in, hidden, k, rng);
    }
    for (double& b : set[kFx].bias.data()) b = 1.0;
  };
  fill(p.small, kernels.small);
  fill(p.large, kernels.large);
  p.fuse = xavier_kernel(2 * hidden, hidden, 1, rng);
  return p;
}

CellParams init_params(CellKind kind, std::size_t in_channels, std::size_t hidden,
                       KernelSet kernels, std::uint64_t seed) {
  if (kind == CellKind::kConv) return init_convlstm(in_channels, hidden, kernels.small, seed);
  return init_mklstm(in_channels, hidden, kernels, seed);
}

std::size_t cell_weight_count(const CellParams& params) {
  std::size_t n = 0;
  for_each_kernel(params, [&](const std::string&, const ConvKernel& k) { n += k.weight_count(); });
  return n;
}

std::size_t cell_parameter_count(const CellParams& params) {
  std::size_t n = 0;
  for_each_kernel(params,
                  [&](const std::string&, const ConvKernel& k) { n += k.parameter_count(); });
  return n;
}

BoundConvLSTM bind(Tape& tape, const ConvLSTMParams& params) {
  BoundConvLSTM b;
  for (std::size_t i = 0; i < params.kernels.size(); ++i) b.kernels[i] = tape.bind(params.kernels[i]);
  b.input_channels = params.input_channels();
  b.hidden = params.hidden();
  return b;
}

BoundMKLSTM bind(Tape& tape, const MKLSTMParams& params) {
  BoundMKLSTM b;
  for (std::size_t i = 0; i < params.small.size(); ++i) b.small[i] = tape.bind(params.small[i]);
  for (std::size_t i = 0; i < params.large.size(); ++i) b.large[i] = tape.bind(params.large[i]);
  b.fuse = tape.bind(params.fuse);
  b.input_channels = params.input_channels();
  b.hidden = params.hidden();
  return b;
}

BoundCell bind(Tape& tape, const CellParams& params) {
  return std::visit([&](const auto& p) -> BoundCell { return bind(tape, p); }, params);
}

ConvStep convlstm_step(Tape& tape, const BoundConvLSTM& cell, Var x, const ConvState& state) {
  check_step_shapes(tape, x, state.h, cell.input_channels, cell.hidden, "convlstm_step");
  require_same_shape(tape.value(state.h), tape.value(state.c), "convlstm_step state");
  const std::size_t hid = cell.hidden;
  const std::size_t in = cell.input_channels;
  const auto& k = cell.kernels;
  const std::array<ConvGroup, 4> groups{
      ConvGroup{{ConvTerm{k[kIx], 0}, ConvTerm{k[kIh], in}}},
      ConvGroup{{ConvTerm{k[kFx], 0}, ConvTerm{k[kFh], in}}},
      ConvGroup{{ConvTerm{k[kGx], 0}, ConvTerm{k[kGh], in}}},
      ConvGroup{{ConvTerm{k[kOx], 0}, ConvTerm{k[kOh], in}}}};

  const Var xh = concat_channels(tape, x, state.h);
  const Var pre = conv2d_packed(tape, xh, groups);
  const Var i = sigmoid(tape, slice_channels(tape, pre, 0, hid));
  const Var f = sigmoid(tape, slice_channels(tape, pre, hid, hid));
  const Var g = mslstm::tanh(tape, slice_channels(tape, pre, 2 * hid, hid));
  const Var o = sigmoid(tape, slice_channels(tape, pre, 3 * hid, hid));
  const Var c = add(tape, hadamard(tape, f, state.c), hadamard(tape, i, g));
  const Var h = hadamard(tape, o, mslstm::tanh(tape, c));
  return ConvStep{h, ConvState{h, c}};
}

MKStep mklstm_step(Tape& tape, const BoundMKLSTM& cell, Var x, const MKState& state) {
  check_step_shapes(tape, x, state.h, cell.input_channels, cell.hidden, "mklstm_step");
  require_same_shape(tape.value(state.h), tape.value(state.c), "mklstm_step state");
  require_same_shape(tape.value(state.h), tape.value(state.c_tilde), "mklstm_step state");
  const std::size_t hid = cell.hidden;
  const std::size_t in = cell.input_channels;

  const Var xh = concat_channels(tape, x, state.h);
  const auto small_groups = gate_groups(cell.small, in);
  const auto large_groups = gate_groups(cell.large, in);
  const Var pre_s = conv2d_packed(tape, xh, small_groups);
  const Var pre_l = conv2d_packed(tape, xh, large_groups);

  auto update = [&](Var pre, Var c_prev) {
    const Var i = sigmoid(tape, slice_channels(tape, pre, 0, hid));
    const Var f = sigmoid(tape, slice_channels(tape, pre, hid, hid));
    const Var g = mslstm::tanh(tape, slice_channels(tape, pre, 2 * hid, hid));
    return add(tape, hadamard(tape, f, c_prev), hadamard(tape, i, g));
  };
  const Var c = update(pre_s, state.c);
  const Var c_tilde = update(pre_l, state.c_tilde);

  // Output gate: six convolutions, over x, H_{t-1} and the new cell states.
  const Var o_xh = add(tape, slice_channels(tape, pre_s, 3 * hid, hid),
                       slice_channels(tape, pre_l, 3 * hid, hid));
  const Var o_c = add(tape, conv2d_same(tape, c, cell.small[kOc]),
                      conv2d_same(tape, c_tilde, cell.large[kOc]));
  const Var o = sigmoid(tape, add(tape, o_xh, o_c));

  const Var fused = conv2d_same(tape, concat_channels(tape, c, c_tilde), cell.fuse);
  const Var h = hadamard(tape, o, mslstm::tanh(tape, fused));
  return MKStep{h, MKState{h, c, c_tilde}};
}

std::pair<Var, CellState> cell_step(Tape& tape, const BoundCell& cell, Var x,
                                    const CellState& state) {
  if (const auto* conv = std::get_if<BoundConvLSTM>(&cell)) {
    const auto* s = std::get_if<ConvState>(&state);
    if (!s) fail(ErrorCode::kUsage, "ConvLSTM layer given a multi-kernel state");
    ConvStep step = convlstm_step(tape, *conv, x, *s);
    return {step.h_out, step.state};
  }
  const auto* s = std::get_if<MKState>(&state);
  if (!s) fail(ErrorCode::kUsage, "MK-LSTM layer given a ConvLSTM state");
  MKStep step = mklstm_step(tape, std::get<BoundMKLSTM>(cell), x, *s);
  return {step.h_out, step.state};
}

CellState zero_state(Tape& tape, CellKind kind, std::size_t batch, std::size_t hidden,
                     std::size_t h, std::size_t w) {
  const Shape s{batch, hidden, h, w};
  if (kind == CellKind::kConv) {
    return ConvState{tape.constant(Tensor::zeros(s)), tape.constant(Tensor::zeros(s))};
  }
  return MKState{tape.constant(Tensor::zeros(s)), tape.constant(Tensor::zeros(s)),
                 tape.constant(Tensor::zeros(s))};
}

}  // namespace mslstm
