#include "mslstm/cost_model.hpp"

#include "mslstm/error.hpp"

namespace mslstm {

std::uint64_t closed_form_cell_params(CellKind kind, std::size_t hidden, KernelSet kernels) {
  const std::uint64_t c2 = static_cast<std::uint64_t>(hidden) * hidden;
  if (kind == CellKind::kConv) return 8 * c2 * kernels.small * kernels.small;
  return 9 * c2 * (kernels.small * kernels.small + kernels.large * kernels.large) + 2 * c2;
}

CostReport cost_report(const ArchitectureConfig& config, const CostInput& input, std::size_t steps,
                       const CostOptions& options) {
  config.validate();
  const std::size_t ms = config.max_scale();
  if (input.h % ms != 0 || input.w % ms != 0) {
    fail(ErrorCode::kShape, "frame " + std::to_string(input.h) + "x" + std::to_string(input.w) +
                                " is not divisible by the pyramid scale " + std::to_string(ms));
  }
  const Model model = Model::build(config, 0);
  const std::uint64_t b = input.batch;
  const std::uint64_t T = steps;
  CostReport r;
  r.steps = steps;
  for (std::size_t l = 0; l < config.layers.size(); ++l) {
    const LayerSpec& spec = config.layers[l];
    LayerCost lc;
    lc.layer = l;
    lc.kind = spec.kind;
    lc.scale = spec.scale;
    lc.h = input.h / spec.scale;
    lc.w = input.w / spec.scale;
    const std::uint64_t pixels = static_cast<std::uint64_t>(lc.h) * lc.w;
    std::uint64_t macs = 0;
    for_each_kernel(model.cells()[l], [&](const std::string&, const ConvKernel& k) {
      lc.weight_params += k.weight_count();
      lc.bias_params += k.bias.size();
      macs += static_cast<std::uint64_t>(k.weight_count()) * pixels;
    });
    lc.model_params = closed_form_cell_params(spec.kind, spec.hidden, config.kernels);
    lc.flops = 2 * b * macs * T;
    const std::uint64_t u_tilde =
        spec.kind == CellKind::kConv ? options.u_tilde_conv : options.u_tilde_multi_kernel;
    lc.m_out = u_tilde * b * spec.hidden * pixels * T;
    r.params += lc.weight_params;
    r.model_params += lc.model_params;
    r.flops += lc.flops;
    r.m_out += lc.m_out;
    r.m_par += lc.weight_params + lc.bias_params;
    r.layers.push_back(lc);
  }
  r.head_params = model.head().parameter_count();
  r.head_flops = 2 * b * model.head().weight_count() * input.h * input.w * T;
  r.m_par += r.head_params;
  r.m_all = 4 * r.m_par + 2 * r.m_out;
  return r;
}

std::uint64_t count_params_exact(const Model& model) { return model.parameter_count(); }

std::string CostReport::to_csv() const {
  std::string out = "layer,kind,scale,h,w,weight_params,model_params,bias_params,flops,m_out\n";
  for (const LayerCost& l : layers) {
    out += std::to_string(l.layer) + ',' + std::string(cell_kind_name(l.kind)) + ',' +
           std::to_string(l.scale) + ',' + std::to_string(l.h) + ',' + std::to_string(l.w) + ',' +
           std::to_string(l.weight_params) + ',' + std::to_string(l.model_params) + ',' +
           std::to_string(l.bias_params) + ',' + std::to_string(l.flops) + ',' +
           std::to_string(l.m_out) + '\n';
  }
  return out;
}

}  // namespace mslstm
