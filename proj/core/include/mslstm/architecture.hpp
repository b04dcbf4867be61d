#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mslstm/autograd.hpp"
#include "mslstm/cells.hpp"

namespace mslstm {

/// One recurrent layer. `scale` divides the input resolution: the layer runs
/// on (h / scale, w / scale) frames.
struct LayerSpec {
  CellKind kind = CellKind::kConv;
  std::size_t hidden = 32;
  std::size_t scale = 1;
};

/// H of `encoder` (same time step) is added to the input of `decoder`.
struct SkipConnection {
  std::size_t encoder = 0;
  std::size_t decoder = 0;
};

struct ArchitectureConfig {
  std::string preset_name;
  std::vector<LayerSpec> layers;
  std::vector<SkipConnection> skips;
  std::size_t input_channels = 1;
  KernelSet kernels;

  // Throws config_error on invalid scales, skip pairs or channel counts.
  void validate() const;
  std::size_t max_scale() const;
  std::size_t layer_input_channels(std::size_t layer) const;
  // Kernel size of a layer's cell (its largest kernel for multi-kernel cells).
  std::size_t layer_kernel(std::size_t layer) const;
};

struct SequenceSpec {
  std::size_t m = 10;  // observed frames
  std::size_t n = 10;  // predicted frames

  std::size_t total() const { return m + n; }
  void validate() const;
};

/// convlstm6, sms6, tms6 or ms6. Throws config_error for any other name.
ArchitectureConfig preset(std::string_view name, std::size_t hidden = 32,
                          std::size_t input_channels = 1, KernelSet kernels = {});
std::vector<std::string> preset_names();

struct NamedTensor {
  std::string name;
  Tensor* value;
};

class Model {
 public:
  static Model build(const ArchitectureConfig& config, std::uint64_t seed);

  const ArchitectureConfig& config() const { return config_; }
  const std::vector<CellParams>& cells() const { return cells_; }
  std::vector<CellParams>& cells() { return cells_; }
  const ConvKernel& head() const { return head_; }
  ConvKernel& head() { return head_; }

  // Every trainable tensor in a fixed order ("layer0.ix.weight", ..., "head.bias").
  std::vector<NamedTensor> parameters();
  std::vector<std::string> parameter_names() const;
  std::vector<const Tensor*> parameter_values() const;
  std::size_t parameter_count() const;

 private:
  ArchitectureConfig config_;
  std::vector<CellParams> cells_;
  ConvKernel head_;
};

/// Model parameters bound on a tape; `params` follows Model::parameters() order.
struct BoundModel {
  std::vector<BoundCell> cells;
  BoundKernel head;
  std::vector<Var> params;
};

BoundModel bind(Tape& tape, const Model& model);

std::vector<CellState> initial_states(Tape& tape, const ArchitectureConfig& config,
                                      std::size_t batch, std::size_t h, std::size_t w);

struct FrameResult {
  Var prediction;
  std::vector<CellState> states;
  std::vector<Var> layer_outputs;  // H of every layer
};

/// One vertical pass through the stack for a single frame.
FrameResult step_frame(Tape& tape, const ArchitectureConfig& config, const BoundModel& model,
                       Var frame, const std::vector<CellState>& states);

// Called after every step with (step index, frame result).
using StepObserver = std::function<void(std::size_t, const Tape&, const FrameResult&)>;

/// Zero initial states; ground-truth frames for the first m steps, then the
/// model's own predictions. Returns the n predictions X^_m .. X^_{m+n-1}.
std::vector<Var> rollout(Tape& tape, const ArchitectureConfig& config, const BoundModel& model,
                         std::span<const Var> inputs, std::size_t n,
                         const StepObserver& observer = {});

struct FieldSize {
  std::size_t rf = 1;
  std::size_t jump = 1;
};

/// Single-time-step receptive field of each layer's output on the input frame.
std::vector<FieldSize> receptive_field(const ArchitectureConfig& config);
// Receptive field at the last encoder layer (the first half of the stack).
std::size_t encoder_receptive_field(const ArchitectureConfig& config);

}  // namespace mslstm
