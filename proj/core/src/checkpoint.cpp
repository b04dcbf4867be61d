#include "mslstm/checkpoint.hpp"

#include <cstdio>
#include <map>

#include "mslstm/error.hpp"
#include "mslstm/run_config.hpp"
#include "mslstm/tensor_file.hpp"

namespace mslstm {
namespace {

constexpr const char* kFormat = "mslstm-checkpoint";
constexpr int kVersion = 1;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::size_t hidden_of(const ArchitectureConfig& arch) {
  return arch.layers.empty() ? 0 : arch.layers.front().hidden;
}

// Presets are the only architectures a manifest can describe.
void require_preset(const ArchitectureConfig& arch) {
  const ArchitectureConfig p =
      preset(arch.preset_name, hidden_of(arch), arch.input_channels, arch.kernels);
  bool same = p.layers.size() == arch.layers.size() && p.skips.size() == arch.skips.size();
  for (std::size_t i = 0; same && i < p.layers.size(); ++i) {
    same = p.layers[i].kind == arch.layers[i].kind && p.layers[i].hidden == arch.layers[i].hidden &&
           p.layers[i].scale == arch.layers[i].scale;
  }
  for (std::size_t i = 0; same && i < p.skips.size(); ++i) {
    same = p.skips[i].encoder == arch.skips[i].encoder && p.skips[i].decoder == arch.skips[i].decoder;
  }
  if (!same) {
    fail(ErrorCode::kConfig, "architecture does not match preset '" + arch.preset_name +
                                 "'; only preset architectures can be checkpointed");
  }
}

NdArray tensor_array(const Tensor& t) {
  NdArray a;
  const Shape& s = t.shape();
  a.dims = {s.b, s.c, s.h, s.w};
  a.data = t.vec();
  return a;
}

Tensor load_like(const std::filesystem::path& path, const Shape& shape) {
  const NdArray a = read_tensor(path);
  const std::vector<std::uint64_t> want{shape.b, shape.c, shape.h, shape.w};
  if (a.dims != want) {
    fail(ErrorCode::kFormat, path.string() + ": expected shape " + shape.str());
  }
  return Tensor(shape, a.data);
}

}  // namespace

std::uint64_t config_digest(const ArchitectureConfig& arch, const SequenceSpec& seq,
                            const TrainConfig& cfg) {
  std::string text = "preset=" + arch.preset_name + ";layers=";
  for (const LayerSpec& l : arch.layers) {
    text += std::string(cell_kind_name(l.kind)) + "/" + std::to_string(l.hidden) + "/" +
            std::to_string(l.scale) + ",";
  }
  text += ";skips=";
  for (const SkipConnection& s : arch.skips) {
    text += std::to_string(s.encoder) + ">" + std::to_string(s.decoder) + ",";
  }
  text += ";in=" + std::to_string(arch.input_channels) +
          ";k=" + std::to_string(arch.kernels.small) + "/" + std::to_string(arch.kernels.large) +
          ";m=" + std::to_string(seq.m) + ";n=" + std::to_string(seq.n) + ";lr=" + num(cfg.lr) +
          ";batch=" + std::to_string(cfg.batch) + ";seed=" + std::to_string(cfg.seed) +
          ";beta1=" + num(cfg.beta1) + ";beta2=" + num(cfg.beta2) + ";eps=" + num(cfg.eps);
  return fnv1a64(text);
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& dir) {
  require_preset(ck.arch);
  std::error_code ec;
  for (const char* sub : {"param", "adam_m", "adam_v"}) {
    std::filesystem::create_directories(dir / sub, ec);
    if (ec) fail(ErrorCode::kIo, (dir / sub).string() + ": " + ec.message());
  }
  const std::vector<std::string> names = ck.model.parameter_names();
  const auto params = ck.model.parameter_values();
  if (ck.adam.m.size() != params.size() || ck.adam.v.size() != params.size()) {
    fail(ErrorCode::kUsage, "optimizer state does not match the model");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string file = names[i] + ".mslt";
    write_tensor(dir / "param" / file, tensor_array(*params[i]), DType::kF64);
    write_tensor(dir / "adam_m" / file, tensor_array(ck.adam.m[i]), DType::kF64);
    write_tensor(dir / "adam_v" / file, tensor_array(ck.adam.v[i]), DType::kF64);
  }
  std::string manifest;
  auto put = [&](const std::string& k, const std::string& v) { manifest += k + " = " + v + "\n"; };
  put("format", kFormat);
  put("version", std::to_string(kVersion));
  put("preset", ck.arch.preset_name);
  put("hidden", std::to_string(hidden_of(ck.arch)));
  put("input_channels", std::to_string(ck.arch.input_channels));
  put("kernel_small", std::to_string(ck.arch.kernels.small));
  put("kernel_large", std::to_string(ck.arch.kernels.large));
  put("m", std::to_string(ck.seq.m));
  put("n", std::to_string(ck.seq.n));
  put("lr", num(ck.cfg.lr));
  put("batch", std::to_string(ck.cfg.batch));
  put("epochs", std::to_string(ck.cfg.epochs));
  put("seed", std::to_string(ck.cfg.seed));
  put("beta1", num(ck.cfg.beta1));
  put("beta2", num(ck.cfg.beta2));
  put("eps", num(ck.cfg.eps));
  put("epoch", std::to_string(ck.epoch));
  put("adam_step", std::to_string(ck.adam.t));
  put("shuffle_seed", std::to_string(ck.shuffle_seed));
  put("parameters", std::to_string(params.size()));
  put("config_digest", hex(config_digest(ck.arch, ck.seq, ck.cfg)));
  write_file_bytes(dir / "manifest.txt", std::vector<std::uint8_t>(manifest.begin(), manifest.end()));
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto bytes = read_file_bytes(dir / "manifest.txt");
  const std::string source = (dir / "manifest.txt").string();
  std::map<std::string, std::string> kv;
  for (KeyValue& e : parse_key_values(
           std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), source)) {
    kv[e.key] = e.value;
  }
  static const char* kKeys[] = {"format", "version", "preset", "hidden", "input_channels",
                                "kernel_small", "kernel_large", "m", "n", "lr", "batch", "epochs",
                                "seed", "beta1", "beta2", "eps", "epoch", "adam_step",
                                "shuffle_seed", "parameters", "config_digest"};
  std::map<std::string, std::string> defaults;
  for (const char* k : kKeys) {
    if (!kv.count(k)) fail(ErrorCode::kFormat, source + ": missing key '" + k + "'");
    defaults[k] = kv[k];
  }
  RunConfig m(defaults);
  try {
    if (m.get("format") != kFormat || m.get_u64("version") != kVersion) {
      fail(ErrorCode::kFormat, source + ": not a version " + std::to_string(kVersion) +
                                   " checkpoint manifest");
    }
    Checkpoint ck;
    ck.arch = preset(m.get("preset"), m.get_size("hidden"), m.get_size("input_channels"),
                     KernelSet{m.get_size("kernel_small"), m.get_size("kernel_large")});
    ck.seq = SequenceSpec{m.get_size("m"), m.get_size("n")};
    ck.cfg.lr = m.get_double("lr");
    ck.cfg.batch = m.get_size("batch");
    ck.cfg.epochs = m.get_size("epochs");
    ck.cfg.seed = m.get_u64("seed");
    ck.cfg.beta1 = m.get_double("beta1");
    ck.cfg.beta2 = m.get_double("beta2");
    ck.cfg.eps = m.get_double("eps");
    ck.epoch = m.get_size("epoch");
    ck.shuffle_seed = m.get_u64("shuffle_seed");
    if (hex(config_digest(ck.arch, ck.seq, ck.cfg)) != m.get("config_digest")) {
      fail(ErrorCode::kFormat, source + ": config digest mismatch");
    }
    ck.model = Model::build(ck.arch, ck.cfg.seed);
    const std::vector<std::string> names = ck.model.parameter_names();
    auto params = ck.model.parameters();
    if (params.size() != m.get_size("parameters")) {
      fail(ErrorCode::kFormat, source + ": parameter count does not match preset " +
                                   ck.arch.preset_name);
    }
    ck.adam.t = m.get_u64("adam_step");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::string file = names[i] + ".mslt";
      const Shape shape = params[i].value->shape();
      *params[i].value = load_like(dir / "param" / file, shape);
      ck.adam.m.push_back(load_like(dir / "adam_m" / file, shape));
      ck.adam.v.push_back(load_like(dir / "adam_v" / file, shape));
    }
    return ck;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw Error(ErrorCode::kFormat, source + ": " + e.what());
    throw;
  }
}

}  // namespace mslstm
