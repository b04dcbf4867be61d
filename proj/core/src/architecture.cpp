#include "mslstm/architecture.hpp"

#include <algorithm>
#include <cmath>

#include "mslstm/error.hpp"
#include "mslstm/rng.hpp"

namespace mslstm {
namespace {

enum class Resample { kNone, kPool, kUpsample };

Resample resample_between(std::size_t from_scale, std::size_t to_scale) {
  if (to_scale == from_scale) return Resample::kNone;
  if (to_scale == 2 * from_scale) return Resample::kPool;
  if (2 * to_scale == from_scale) return Resample::kUpsample;
  fail(ErrorCode::kConfig, "consecutive layers must keep, halve or double the scale (" +
                               std::to_string(from_scale) + " -> " + std::to_string(to_scale) +
                               ")");
}

constexpr std::uint64_t kHeadStream = 0xFEED;

}  // namespace

void ArchitectureConfig::validate() const {
  if (layers.empty()) fail(ErrorCode::kConfig, "architecture has no layers");
  if (input_channels == 0) fail(ErrorCode::kConfig, "input_channels must be positive");
  if (kernels.small % 2 == 0 || kernels.large % 2 == 0) {
    fail(ErrorCode::kConfig, "kernel sizes must be odd");
  }
  for (const LayerSpec& l : layers) {
    if (l.hidden == 0) fail(ErrorCode::kConfig, "layer hidden channels must be positive");
    if (l.scale != 1 && l.scale != 2 && l.scale != 4) {
      fail(ErrorCode::kConfig, "layer scale must be 1, 2 or 4, got " + std::to_string(l.scale));
    }
  }
  if (layers.front().scale != 1 || layers.back().scale != 1) {
    fail(ErrorCode::kConfig, "first and last layers must run at full resolution");
  }
  for (std::size_t l = 1; l < layers.size(); ++l) {
    resample_between(layers[l - 1].scale, layers[l].scale);
  }
  for (const SkipConnection& s : skips) {
    if (s.encoder >= s.decoder || s.decoder >= layers.size()) {
      fail(ErrorCode::kConfig, "skip (" + std::to_string(s.encoder) + " -> " +
                                   std::to_string(s.decoder) + ") must point forward");
    }
    if (layers[s.encoder].scale != layers[s.decoder].scale) {
      fail(ErrorCode::kConfig, "skip (" + std::to_string(s.encoder) + " -> " +
                                   std::to_string(s.decoder) + ") joins layers of unequal scale");
    }
    if (layers[s.encoder].hidden != layer_input_channels(s.decoder)) {
      fail(ErrorCode::kConfig, "skip source channels do not match decoder input channels");
    }
  }
}

std::size_t ArchitectureConfig::max_scale() const {
  std::size_t m = 1;
  for (const LayerSpec& l : layers) m = std::max(m, l.scale);
  return m;
}

std::size_t ArchitectureConfig::layer_input_channels(std::size_t layer) const {
  return layer == 0 ? input_channels : layers[layer - 1].hidden;
}

std::size_t ArchitectureConfig::layer_kernel(std::size_t layer) const {
  return layers[layer].kind == CellKind::kConv ? kernels.small
                                               : std::max(kernels.small, kernels.large);
}

void SequenceSpec::validate() const {
  if (m < 1) fail(ErrorCode::kUsage, "sequence needs at least one input frame");
  if (n < 1) fail(ErrorCode::kUsage, "sequence needs at least one predicted frame");
}

std::vector<std::string> preset_names() { return {"convlstm6", "sms6", "tms6", "ms6"}; }

ArchitectureConfig preset(std::string_view name, std::size_t hidden, std::size_t input_channels,
                          KernelSet kernels) {
  ArchitectureConfig cfg;
  cfg.preset_name = std::string(name);
  cfg.input_channels = input_channels;
  cfg.kernels = kernels;
  CellKind kind;
  bool pyramid;
  if (name == "convlstm6") {
    kind = CellKind::kConv;
    pyramid = false;
  } else if (name == "sms6") {
    kind = CellKind::kConv;
    pyramid = true;
  } else if (name == "tms6") {
    kind = CellKind::kMultiKernel;
    pyramid = false;
  } else if (name == "ms6") {
    kind = CellKind::kMultiKernel;
    pyramid = true;
  } else {
    fail(ErrorCode::kConfig,
         "unknown preset '" + std::string(name) + "' (valid: convlstm6, sms6, tms6, ms6)");
  }
  const std::array<std::size_t, 6> flat{1, 1, 1, 1, 1, 1};
  const std::array<std::size_t, 6> mirrored{1, 2, 4, 4, 2, 1};
  const auto& scales = pyramid ? mirrored : flat;
  for (std::size_t s : scales) cfg.layers.push_back(LayerSpec{kind, hidden, s});
  if (pyramid) cfg.skips = {SkipConnection{0, 5}, SkipConnection{1, 4}};
  cfg.validate();
  return cfg;
}

Model Model::build(const ArchitectureConfig& config, std::uint64_t seed) {
  config.validate();
  Model model;
  model.config_ = config;
  for (std::size_t l = 0; l < config.layers.size(); ++l) {
    const LayerSpec& spec = config.layers[l];
    model.cells_.push_back(init_params(spec.kind, config.layer_input_channels(l), spec.hidden,
                                       config.kernels, derive_seed(seed, l)));
  }
  const std::size_t top = config.layers.back().hidden;
  model.head_ = ConvKernel::zeros(top, config.input_channels, 1);
  Rng rng(derive_seed(seed, kHeadStream));
  const double a = std::sqrt(6.0 / static_cast<double>(top + config.input_channels));
  for (double& v : model.head_.weight.data()) v = rng.uniform(-a, a);
  return model;
}

std::vector<NamedTensor> Model::parameters() {
  std::vector<NamedTensor> out;
  for (std::size_t l = 0; l < cells_.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    for_each_kernel(cells_[l], [&](const std::string& name, ConvKernel& k) {
      out.push_back({prefix + name + ".weight", &k.weight});
      out.push_back({prefix + name + ".bias", &k.bias});
    });
  }
  out.push_back({"head.weight", &head_.weight});
  out.push_back({"head.bias", &head_.bias});
  return out;
}

std::vector<std::string> Model::parameter_names() const {
  std::vector<std::string> names;
  for (const auto& p : const_cast<Model*>(this)->parameters()) names.push_back(p.name);
  return names;
}

std::vector<const Tensor*> Model::parameter_values() const {
  std::vector<const Tensor*> values;
  for (const auto& p : const_cast<Model*>(this)->parameters()) values.push_back(p.value);
  return values;
}

std::size_t Model::parameter_count() const {
  std::size_t n = head_.parameter_count();
  for (const CellParams& c : cells_) n += cell_parameter_count(c);
  return n;
}

BoundModel bind(Tape& tape, const Model& model) {
  BoundModel bound;
  for (const CellParams& cell : model.cells()) {
    bound.cells.push_back(bind(tape, cell));
    auto collect = [&](const BoundKernel& k) {
      bound.params.push_back(k.weight);
      bound.params.push_back(k.bias);
    };
    if (const auto* c = std::get_if<BoundConvLSTM>(&bound.cells.back())) {
      for (const auto& k : c->kernels) collect(k);
    } else {
      const auto& m = std::get<BoundMKLSTM>(bound.cells.back());
      for (const auto& k : m.small) collect(k);
      for (const auto& k : m.large) collect(k);
      collect(m.fuse);
    }
  }
  bound.head = tape.bind(model.head());
  bound.params.push_back(bound.head.weight);
  bound.params.push_back(bound.head.bias);
  return bound;
}

std::vector<CellState> initial_states(Tape& tape, const ArchitectureConfig& config,
                                      std::size_t batch, std::size_t h, std::size_t w) {
  const std::size_t ms = config.max_scale();
  if (h % ms != 0 || w % ms != 0) {
    fail(ErrorCode::kShape, "frame size " + std::to_string(h) + "x" + std::to_string(w) +
                                " is not divisible by the pyramid depth " + std::to_string(ms));
  }
  std::vector<CellState> states;
  for (const LayerSpec& l : config.layers) {
    states.push_back(zero_state(tape, l.kind, batch, l.hidden, h / l.scale, w / l.scale));
  }
  return states;
}

FrameResult step_frame(Tape& tape, const ArchitectureConfig& config, const BoundModel& model,
                       Var frame, const std::vector<CellState>& states) {
  const Shape& fs = tape.shape(frame);
  const std::size_t ms = config.max_scale();
  if (fs.h % ms != 0 || fs.w % ms != 0) {
    fail(ErrorCode::kShape, "frame " + fs.str() + " is not divisible by the pyramid depth " +
                                std::to_string(ms));
  }
  if (states.size() != config.layers.size() || model.cells.size() != config.layers.size()) {
    fail(ErrorCode::kUsage, "step_frame: one state and one cell per layer required");
  }
  FrameResult out;
  Var input = frame;
  for (std::size_t l = 0; l < config.layers.size(); ++l) {
    if (l > 0) {
      switch (resample_between(config.layers[l - 1].scale, config.layers[l].scale)) {
        case Resample::kPool: input = maxpool2(tape, input); break;
        case Resample::kUpsample: input = upsample_bilinear2(tape, input); break;
        case Resample::kNone: break;
      }
      for (const SkipConnection& s : config.skips) {
        if (s.decoder == l) input = add(tape, input, out.layer_outputs[s.encoder]);
      }
    }
    auto [h, state] = cell_step(tape, model.cells[l], input, states[l]);
    out.layer_outputs.push_back(h);
    out.states.push_back(state);
    input = h;
  }
  out.prediction = conv2d_same(tape, input, model.head);
  return out;
}

std::vector<Var> rollout(Tape& tape, const ArchitectureConfig& config, const BoundModel& model,
                         std::span<const Var> inputs, std::size_t n,
                         const StepObserver& observer) {
  if (inputs.empty()) fail(ErrorCode::kUsage, "rollout needs at least one input frame");
  if (n < 1) fail(ErrorCode::kUsage, "rollout needs n >= 1");
  const Shape fs = tape.shape(inputs.front());
  std::vector<CellState> states = initial_states(tape, config, fs.b, fs.h, fs.w);
  const std::size_t m = inputs.size();
  std::vector<Var> predictions;
  Var previous;
  for (std::size_t t = 0; t + 1 < m + n; ++t) {
    const Var x = t < m ? inputs[t] : previous;
    FrameResult r = step_frame(tape, config, model, x, states);
    if (observer) observer(t, tape, r);
    if (t + 1 >= m) predictions.push_back(r.prediction);
    previous = r.prediction;
    states = std::move(r.states);
  }
  return predictions;
}

std::vector<FieldSize> receptive_field(const ArchitectureConfig& config) {
  config.validate();
  std::vector<FieldSize> fields;
  FieldSize f;
  for (std::size_t l = 0; l < config.layers.size(); ++l) {
    if (l > 0) {
      switch (resample_between(config.layers[l - 1].scale, config.layers[l].scale)) {
        case Resample::kPool:
          f.rf += f.jump;
          f.jump *= 2;
          break;
        case Resample::kUpsample:
          // Each output blends two neighbouring source pixels per axis.
          f.rf += f.jump;
          f.jump /= 2;
          break;
        case Resample::kNone: break;
      }
      for (const SkipConnection& s : config.skips) {
        if (s.decoder == l) f.rf = std::max(f.rf, fields[s.encoder].rf);
      }
    }
    f.rf += (config.layer_kernel(l) - 1) * f.jump;
    fields.push_back(f);
  }
  return fields;
}

std::size_t encoder_receptive_field(const ArchitectureConfig& config) {
  const auto fields = receptive_field(config);
  return fields[fields.size() / 2 - (fields.size() > 1 ? 1 : 0)].rf;
}

}  // namespace mslstm
