#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "mslstm/checkpoint.hpp"
#include "mslstm/cost_model.hpp"
#include "mslstm/datasets.hpp"
#include "mslstm/error.hpp"
#include "mslstm/glyphs.hpp"
#include "mslstm/metrics.hpp"
#include "mslstm/parallel.hpp"
#include "mslstm/pgm.hpp"
#include "mslstm/rng.hpp"
#include "mslstm/training.hpp"

namespace fs = std::filesystem;

namespace mslstm::cli {
namespace {

const OptionSpec kThreads{"threads", "0", "worker threads (0 = MSLSTM_THREADS or 1)"};

std::string fmt(double v, const char* spec = "%.9g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void apply_threads(const RunConfig& cfg) {
  if (const std::size_t n = cfg.get_size("threads"); n > 0) set_thread_count(n);
}

const std::string& required(const RunConfig& cfg, const std::string& key) {
  const std::string& v = cfg.get(key);
  if (v.empty()) fail(ErrorCode::kUsage, "--" + key + " is required");
  return v;
}

std::string valid_presets() {
  std::string out;
  for (const std::string& p : preset_names()) out += (out.empty() ? "" : ", ") + p;
  return out;
}

const std::string& checked_preset(const std::string& name) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    fail(ErrorCode::kUsage, "unknown preset '" + name + "'; valid presets: " + valid_presets());
  }
  return name;
}

fs::path ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

TrainConfig train_config(const RunConfig& cfg, std::uint64_t seed) {
  TrainConfig t;
  t.lr = cfg.get_double("lr");
  t.batch = cfg.get_size("batch");
  t.epochs = cfg.get_size("epochs");
  t.seed = seed;
  t.validate();
  return t;
}

SequenceSpec sequence_spec(const RunConfig& cfg) {
  SequenceSpec s{cfg.get_size("m"), cfg.get_size("n")};
  s.validate();
  if (s.m < 1) fail(ErrorCode::kUsage, "m must be at least 1");
  return s;
}

std::string dataset_kind(const fs::path& data) {
  const fs::path manifest = data.parent_path() / "manifest.txt";
  if (!fs::exists(manifest)) return "unknown";
  for (const KeyValue& kv : parse_key_values(read_text(manifest), manifest.string())) {
    if (kv.key == "kind") return kv.value;
  }
  return "unknown";
}

std::string shape_text(const SequenceDataset& d) {
  std::string s;
  for (std::uint64_t v : d.array().dims) s += (s.empty() ? "" : "x") + std::to_string(v);
  return s;
}

void gen_moving(const RunConfig& cfg, const fs::path& out, std::string& manifest) {
  const std::uint64_t seed = cfg.get_u64("seed");
  MovingSpec spec;
  spec.digits_per_frame = cfg.get_size("digits");
  spec.frames = cfg.get_size("frames");
  spec.canvas = cfg.get_size("canvas");
  spec.glyph_size = cfg.get_size("glyph_size");
  spec.speed_min = cfg.get_double("speed_min");
  spec.speed_max = cfg.get_double("speed_max");

  GlyphSet train_glyphs, test_glyphs;
  if (const std::string& idx = cfg.get("mnist_train"); !idx.empty()) {
    train_glyphs = read_idx(idx);
    const std::string& test_idx = cfg.get("mnist_test");
    test_glyphs = test_idx.empty() ? train_glyphs : read_idx(test_idx);
    manifest += "glyph_source = idx\n";
  } else {
    const std::size_t n = cfg.get_size("glyphs");
    train_glyphs = procedural_glyphs(n, derive_seed(seed, 3));
    test_glyphs = procedural_glyphs(n, derive_seed(seed, 4));
    manifest += "glyph_source = procedural\n";
  }
  struct Split {
    const char* name;
    std::size_t count;
    std::uint64_t stream;
    const GlyphSet* glyphs;
  };
  for (const Split& s : {Split{"train", cfg.get_size("count"), 1, &train_glyphs},
                         Split{"test", cfg.get_size("test_count"), 2, &test_glyphs}}) {
    MovingSpec sp = spec;
    sp.count = s.count;
    sp.seed = derive_seed(seed, s.stream);
    sp.validate();
    const SequenceDataset ds = generate_moving(sp, prepare_glyphs(sp, *s.glyphs), s.name);
    ds.save(out / (std::string(s.name) + ".mslt"));
    std::string sources;
    for (const std::string& id : ds.sources) sources += id + "\n";
    write_text(out / (std::string(s.name) + "_sources.txt"), sources);
    manifest += std::string(s.name) + "_shape = " + shape_text(ds) + "\n";
    manifest += std::string(s.name) + "_glyphs_used = " + std::to_string(ds.sources.size()) + "\n";
  }
}

void gen_advection(const RunConfig& cfg, const fs::path& out, std::string& manifest) {
  const std::uint64_t seed = cfg.get_u64("seed");
  AdvectionSpec spec;
  spec.blobs = cfg.get_size("blobs");
  spec.frames = cfg.get_size("frames");
  spec.canvas = cfg.get_size("canvas");
  for (const auto& [name, count, stream] :
       {std::tuple{"train", cfg.get_size("count"), 1}, std::tuple{"test", cfg.get_size("test_count"), 2}}) {
    AdvectionSpec sp = spec;
    sp.count = count;
    sp.seed = derive_seed(seed, static_cast<std::uint64_t>(stream));
    const SequenceDataset ds = generate_advection(sp, name);
    ds.save(out / (std::string(name) + ".mslt"));
    manifest += std::string(name) + "_shape = " + shape_text(ds) + "\n";
  }
}

}  // namespace

std::vector<CommandSpec> command_specs() {
  return {
      {"gen-data",
       "generate synthetic train/test sequence files",
       {{"kind", "moving", "moving (bouncing digits) or advection (drifting blobs)"},
        {"out", "", "output directory"},
        {"seed", "0", "master seed"},
        {"count", "1000", "training sequences"},
        {"test_count", "200", "test sequences"},
        {"frames", "20", "frames per sequence"},
        {"canvas", "64", "frame side length"},
        {"digits", "2", "digits per sequence (moving)"},
        {"glyph_size", "28", "digit size in pixels, 28 or a divisor of it (moving)"},
        {"speed_min", "2", "minimum digit speed in pixels/frame (moving)"},
        {"speed_max", "5", "maximum digit speed in pixels/frame (moving)"},
        {"mnist_train", "", "MNIST IDX image file for training digits (moving)"},
        {"mnist_test", "", "MNIST IDX image file for test digits (moving)"},
        {"glyphs", "1000", "procedural digits per split when no IDX file is given"},
        {"blobs", "3", "blobs per sequence (advection)"},
        kThreads}},
      {"train",
       "train a preset on a sequence file",
       {{"data", "", "training sequences (.mslt)"},
        {"preset", "ms6", "convlstm6, sms6, tms6 or ms6"},
        {"hidden", "32", "hidden channels per layer"},
        {"epochs", "1", "total epochs"},
        {"batch", "4", "mini-batch size"},
        {"lr", "0.0003", "Adam learning rate"},
        {"seed", "0", "initialisation and shuffling seed"},
        {"m", "10", "observed frames"},
        {"n", "10", "predicted frames"},
        {"out", "", "run directory (checkpoint/, train_log.csv, config.txt)"},
        {"resume", "false", "continue from <out>/checkpoint", true},
        kThreads}},
      {"eval",
       "score a checkpoint or a baseline on a sequence file",
       {{"checkpoint", "", "checkpoint directory"},
        {"data", "", "test sequences (.mslt)"},
        {"oracle", "", "baseline instead of a checkpoint: copy-last or perfect"},
        {"preset", "", "expected preset; must match the checkpoint"},
        {"hidden", "0", "expected hidden channels; must match the checkpoint"},
        {"m", "0", "observed frames (0 = from checkpoint, else 10)"},
        {"n", "0", "predicted frames (0 = from checkpoint, else 10)"},
        {"kind", "auto", "auto, moving or advection; advection adds CSI/HSS"},
        {"thresholds", "0.5,2,5", "CSI/HSS thresholds in mm/h"},
        {"batch", "16", "sequences per evaluation batch"},
        {"out", "", "also write the metric CSV here"},
        kThreads}},
      {"analyze",
       "cost model and receptive fields of presets",
       {{"preset", "all", "a preset name or all"},
        {"hidden", "32", "hidden channels per layer"},
        {"input_channels", "0", "frame channels (0 = same as hidden)"},
        {"kernel_small", "3", "small kernel size"},
        {"kernel_large", "5", "large kernel size"},
        {"batch", "1", "batch size b"},
        {"height", "64", "frame height"},
        {"width", "64", "frame width"},
        {"steps", "1", "time steps T"},
        {"u_tilde_conv", "12", "activation multiplier of a ConvLSTM cell"},
        {"u_tilde_mk", "26", "activation multiplier of an MK-LSTM cell"},
        kThreads}},
      {"dump-layers",
       "write per-layer hidden-state images for one sequence",
       {{"checkpoint", "", "checkpoint directory"},
        {"data", "", "sequence file (.mslt)"},
        {"index", "0", "sequence index"},
        {"m", "0", "observed frames (0 = from checkpoint)"},
        {"n", "0", "predicted frames (0 = from checkpoint)"},
        {"out", "", "image directory"},
        {"montage", "false", "also write montage.pgm", true},
        kThreads}},
      {"compare",
       "train several presets under one budget and tabulate test MSE",
       {{"train", "", "training sequences (.mslt)"},
        {"test", "", "test sequences (.mslt)"},
        {"presets", "convlstm6,sms6,tms6,ms6", "comma-separated presets"},
        {"seeds", "0", "comma-separated seeds"},
        {"hidden", "32", "hidden channels per layer"},
        {"epochs", "1", "epochs per run"},
        {"batch", "4", "mini-batch size"},
        {"lr", "0.0003", "Adam learning rate"},
        {"m", "10", "observed frames"},
        {"n", "10", "predicted frames"},
        {"out", "", "also write the table here"},
        kThreads}},
  };
}

const CommandSpec& command_spec(const std::string& name) {
  static const std::vector<CommandSpec> specs = command_specs();
  for (const CommandSpec& s : specs) {
    if (s.name == name) return s;
  }
  fail(ErrorCode::kUsage, "unknown command '" + name + "'");
}

RunConfig default_config(const CommandSpec& spec) {
  std::map<std::string, std::string> d;
  for (const OptionSpec& o : spec.options) d[o.key] = o.default_value;
  return RunConfig(std::move(d));
}

void cmd_gen_data(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  apply_threads(cfg);
  const std::string kind = cfg.get("kind");
  if (kind != "moving" && kind != "advection") {
    fail(ErrorCode::kUsage, "--kind must be moving or advection, got '" + kind + "'");
  }
  if (cfg.get_size("count") == 0 || cfg.get_size("test_count") == 0) {
    fail(ErrorCode::kUsage, "--count and --test-count must be positive");
  }
  const fs::path dir = ensure_dir(required(cfg, "out"));
  std::string manifest = cfg.echo();
  if (kind == "moving") gen_moving(cfg, dir, manifest);
  else gen_advection(cfg, dir, manifest);
  write_text(dir / "manifest.txt", manifest);
  log << "wrote " << (dir / "train.mslt").string() << " and " << (dir / "test.mslt").string() << "\n";
  out << manifest;
}

void cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  apply_threads(cfg);
  const std::string& preset_name = checked_preset(cfg.get("preset"));
  const fs::path dir = required(cfg, "out");
  const SequenceDataset data = SequenceDataset::load(required(cfg, "data"), "train");
  const TrainConfig tc = train_config(cfg, cfg.get_u64("seed"));
  const SequenceSpec seq = sequence_spec(cfg);
  const ArchitectureConfig arch = preset(preset_name, cfg.get_size("hidden"), data.channels());

  const fs::path ck_dir = dir / "checkpoint";
  const fs::path log_path = dir / "train_log.csv";
  std::string log_csv = "epoch,mean_loss,wall_seconds\n";
  std::optional<Trainer> trainer;
  if (cfg.get_bool("resume")) {
    const Checkpoint ck = load_checkpoint(ck_dir);
    if (ck.arch.preset_name != preset_name || ck.arch.layers.front().hidden != arch.layers.front().hidden ||
        ck.arch.input_channels != arch.input_channels) {
      fail(ErrorCode::kConfig, "checkpoint holds " + ck.arch.preset_name + " (hidden " +
                                   std::to_string(ck.arch.layers.front().hidden) +
                                   "), which does not match --preset/--hidden");
    }
    trainer.emplace(ck, tc);
    if (fs::exists(log_path)) {
      const std::string old = read_text(log_path);
      std::size_t pos = old.find('\n');
      for (std::size_t e = 1; e <= ck.epoch && pos != std::string::npos; ++e) {
        const std::size_t next = old.find('\n', pos + 1);
        if (next == std::string::npos) break;
        log_csv += old.substr(pos + 1, next - pos);
        pos = next;
      }
    }
    log << "resuming after epoch " << ck.epoch << "\n";
  } else {
    trainer.emplace(arch, seq, tc);
  }
  ensure_dir(dir);
  write_text(dir / "config.txt", cfg.echo());
  write_text(log_path, log_csv);
  double last = 0.0;
  train(*trainer, data, [&](const Trainer& t, const EpochLog& e) {
    save_checkpoint(t.checkpoint(), ck_dir);
    log_csv += std::to_string(e.epoch) + "," + fmt(e.mean_loss, "%.17g") + "," +
               fmt(e.wall_seconds, "%.3f") + "\n";
    write_text(log_path, log_csv);
    log << "epoch " << e.epoch << "/" << t.config().epochs << " loss " << fmt(e.mean_loss)
        << " (" << fmt(e.wall_seconds, "%.1f") << " s)\n";
    last = e.mean_loss;
  });
  out << "checkpoint = " << ck_dir.string() << "\n"
      << "epochs = " << trainer->epoch() << "\n"
      << "final_loss = " << fmt(last) << "\n";
}

void cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  apply_threads(cfg);
  const fs::path data_path = required(cfg, "data");
  const SequenceDataset data = SequenceDataset::load(data_path, "test");
  const std::string oracle = cfg.get("oracle");
  std::optional<Checkpoint> ck;
  Predictor predictor;
  SequenceSpec seq{10, 10};
  if (!oracle.empty()) {
    if (oracle == "copy-last") predictor = copy_last_predictor();
    else if (oracle == "perfect") predictor = oracle_predictor();
    else fail(ErrorCode::kUsage, "--oracle must be copy-last or perfect, got '" + oracle + "'");
  } else {
    ck = load_checkpoint(required(cfg, "checkpoint"));
    const std::string& want_preset = cfg.get("preset");
    if (!want_preset.empty() && checked_preset(want_preset) != ck->arch.preset_name) {
      fail(ErrorCode::kConfig, "checkpoint holds " + ck->arch.preset_name + ", not " + want_preset);
    }
    const std::size_t want_hidden = cfg.get_size("hidden");
    if (want_hidden != 0 && want_hidden != ck->arch.layers.front().hidden) {
      fail(ErrorCode::kConfig, "checkpoint has hidden " +
                                   std::to_string(ck->arch.layers.front().hidden) + ", not " +
                                   std::to_string(want_hidden));
    }
    if (ck->arch.input_channels != data.channels()) {
      fail(ErrorCode::kConfig, "checkpoint expects " + std::to_string(ck->arch.input_channels) +
                                   " channels, data has " + std::to_string(data.channels()));
    }
    seq = ck->seq;
    predictor = model_predictor(ck->model);
  }
  if (cfg.get_size("m") != 0) seq.m = cfg.get_size("m");
  if (cfg.get_size("n") != 0) seq.n = cfg.get_size("n");

  std::string kind = cfg.get("kind");
  if (kind == "auto") kind = dataset_kind(data_path);
  EvalOptions opts;
  opts.batch = cfg.get_size("batch");
  if (kind == "advection") {
    for (double t : cfg.get_doubles("thresholds")) opts.thresholds.push_back(mm_per_hour_to_units(t));
  }
  const MetricReport report = evaluate(predictor, data, seq, opts);
  const std::string csv = report.to_csv();
  if (!opts.thresholds.empty()) out << "# " << threshold_mapping_note() << "\n";
  out << csv;
  if (const std::string& path = cfg.get("out"); !path.empty()) write_text(path, csv);
  log << "evaluated " << data.count() << " sequences, m = " << seq.m << ", n = " << seq.n << "\n";
}

void cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const std::size_t hidden = cfg.get_size("hidden");
  const std::size_t in = cfg.get_size("input_channels") == 0 ? hidden : cfg.get_size("input_channels");
  const KernelSet kernels{cfg.get_size("kernel_small"), cfg.get_size("kernel_large")};
  const CostInput input{cfg.get_size("batch"), cfg.get_size("height"), cfg.get_size("width")};
  const std::size_t steps = cfg.get_size("steps");
  const CostOptions options{cfg.get_u64("u_tilde_conv"), cfg.get_u64("u_tilde_mk")};

  std::vector<std::string> names;
  if (cfg.get("preset") == "all") names = preset_names();
  else names.push_back(checked_preset(cfg.get("preset")));

  const CostReport base = cost_report(preset("convlstm6", hidden, in, kernels), input, steps, options);
  std::string summary =
      "preset,cell_params,cell_params_closed_form,flops,flops_ratio_vs_convlstm6,"
      "m_par,m_out,m_all,encoder_rf\n";
  std::string details;
  for (const std::string& name : names) {
    const ArchitectureConfig arch = preset(name, hidden, in, kernels);
    const CostReport r = cost_report(arch, input, steps, options);
    const auto fields = receptive_field(arch);
    const std::size_t rf = encoder_receptive_field(arch);
    const double ratio = static_cast<double>(r.flops) / static_cast<double>(base.flops);
    summary += name + "," + std::to_string(r.params) + "," + std::to_string(r.model_params) + "," +
               std::to_string(r.flops) + "," + fmt(ratio, "%.6g") +
               "," + std::to_string(r.m_par) + "," + std::to_string(r.m_out) + "," +
               std::to_string(r.m_all) + "," + std::to_string(rf) + "\n";
    details += "\n# " + name + "\n";
    details += "preset = " + name + "\n";
    details += "cell_params = " + std::to_string(r.params) + "\n";
    details += "cell_params_closed_form = " + std::to_string(r.model_params) + "\n";
    details += "head_params = " + std::to_string(r.head_params) + "\n";
    details += "flops = " + std::to_string(r.flops) + "\n";
    details += "head_flops = " + std::to_string(r.head_flops) + "\n";
    details += "flops_ratio_vs_convlstm6 = " + fmt(ratio, "%.6g") + "\n";
    details += "m_par = " + std::to_string(r.m_par) + "\n";
    details += "m_out = " + std::to_string(r.m_out) + "\n";
    details += "m_all = " + std::to_string(r.m_all) + "\n";
    details += "encoder_rf = " + std::to_string(rf) + "\n";
    std::string table = r.to_csv();
    // Append rf and jump to each layer row.
    std::string merged;
    std::size_t row = 0, pos = 0;
    while (pos < table.size()) {
      const std::size_t nl = table.find('\n', pos);
      std::string line = table.substr(pos, nl - pos);
      line += row == 0 ? ",rf,jump"
                       : "," + std::to_string(fields[row - 1].rf) + "," +
                             std::to_string(fields[row - 1].jump);
      merged += line + "\n";
      ++row;
      pos = nl + 1;
    }
    details += merged;
  }
  out << "# b = " << input.batch << ", h = " << input.h << ", w = " << input.w << ", T = " << steps
      << ", hidden = " << hidden << ", input_channels = " << in << "\n"
      << summary << details;
}

void cmd_dump_layers(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  apply_threads(cfg);
  const Checkpoint ck = load_checkpoint(required(cfg, "checkpoint"));
  const SequenceDataset data = SequenceDataset::load(required(cfg, "data"), "test");
  if (ck.arch.input_channels != data.channels()) {
    fail(ErrorCode::kConfig, "checkpoint expects " + std::to_string(ck.arch.input_channels) +
                                 " channels, data has " + std::to_string(data.channels()));
  }
  const std::size_t index = cfg.get_size("index");
  if (index >= data.count()) {
    fail(ErrorCode::kUsage, "--index " + std::to_string(index) + " out of range (" +
                                std::to_string(data.count()) + " sequences)");
  }
  SequenceSpec seq = ck.seq;
  if (cfg.get_size("m") != 0) seq.m = cfg.get_size("m");
  if (cfg.get_size("n") != 0) seq.n = cfg.get_size("n");
  seq.validate();
  if (data.frames() < seq.total()) {
    fail(ErrorCode::kUsage, "sequence has " + std::to_string(data.frames()) + " frames, need " +
                                std::to_string(seq.total()));
  }
  const fs::path dir = ensure_dir(required(cfg, "out"));
  const std::size_t layers = ck.arch.layers.size();
  const std::size_t steps = seq.total();

  Tape tape(false);
  const BoundModel bm = bind(tape, ck.model);
  std::vector<CellState> states = initial_states(tape, ck.arch, 1, data.height(), data.width());
  std::vector<std::vector<GrayImage>> grid;  // rows: input, layers..., prediction
  Var previous;
  std::size_t files = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    const Var x = t < seq.m ? tape.constant(data.frame(index, t)) : previous;
    FrameResult r = step_frame(tape, ck.arch, bm, x, states);
    std::vector<GrayImage> column;
    const std::string step = "t" + std::to_string(t);
    column.push_back(unit_to_gray(tape.value(x)));
    write_pgm(dir / ("input_" + step + ".pgm"), column.back());
    for (std::size_t l = 0; l < layers; ++l) {
      const Tensor& h = tape.value(r.layer_outputs[l]);
      column.push_back(normalize_to_gray(channel_mean(h), h.shape().w, h.shape().h));
      write_pgm(dir / (step + "_l" + std::to_string(l) + ".pgm"), column.back());
    }
    column.push_back(unit_to_gray(tape.value(r.prediction)));
    write_pgm(dir / ("pred_" + step + ".pgm"), column.back());
    files += layers + 2;
    grid.push_back(std::move(column));
    previous = r.prediction;
    states = std::move(r.states);
  }
  if (cfg.get_bool("montage")) {
    const std::size_t cw = data.width(), ch = data.height();
    GrayImage m{cw * steps, ch * (layers + 2), {}};
    m.pixels.assign(m.width * m.height, 0);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t r = 0; r < grid[t].size(); ++r) {
        const GrayImage& img = grid[t][r];
        for (std::size_t y = 0; y < img.height; ++y) {
          std::copy_n(img.pixels.begin() + static_cast<std::ptrdiff_t>(y * img.width), img.width,
                      m.pixels.begin() + static_cast<std::ptrdiff_t>((r * ch + y) * m.width + t * cw));
        }
      }
    }
    write_pgm(dir / "montage.pgm", m);
    ++files;
  }
  log << "wrote " << files << " images to " << dir.string() << "\n";
  out << "steps = " << steps << "\nlayers = " << layers << "\nimages = " << files << "\n";
}

void cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  apply_threads(cfg);
  const SequenceDataset train_data = SequenceDataset::load(required(cfg, "train"), "train");
  const SequenceDataset test_data = SequenceDataset::load(required(cfg, "test"), "test");
  const SequenceSpec seq = sequence_spec(cfg);
  const auto presets = cfg.get_list("presets");
  if (presets.empty()) fail(ErrorCode::kUsage, "--presets is empty");
  for (const std::string& p : presets) checked_preset(p);
  std::vector<std::uint64_t> seeds;
  for (const std::string& s : cfg.get_list("seeds")) {
    RunConfig one(std::map<std::string, std::string>{{"seed", s}});
    seeds.push_back(one.get_u64("seed"));
  }
  if (seeds.empty()) fail(ErrorCode::kUsage, "--seeds is empty");

  std::string table = "preset,seed,params,flops,test_mse\n";
  for (std::uint64_t seed : seeds) {
    for (const std::string& name : presets) {
      const TrainConfig tc = train_config(cfg, seed);
      const ArchitectureConfig arch = preset(name, cfg.get_size("hidden"), train_data.channels());
      Trainer trainer(arch, seq, tc);
      train(trainer, train_data, [&](const Trainer&, const EpochLog& e) {
        log << name << " seed " << seed << " epoch " << e.epoch << " loss " << fmt(e.mean_loss)
            << " (" << fmt(e.wall_seconds, "%.1f") << " s)\n";
      });
      const MetricReport report = evaluate(model_predictor(trainer.model()), test_data, seq);
      const CostReport cost =
          cost_report(arch, CostInput{1, train_data.height(), train_data.width()}, seq.total() - 1);
      table += name + "," + std::to_string(seed) + "," +
               std::to_string(count_params_exact(trainer.model())) + "," +
               std::to_string(cost.flops + cost.head_flops) + "," + fmt(report.overall.mse) + "\n";
    }
  }
  out << table;
  if (const std::string& path = cfg.get("out"); !path.empty()) write_text(path, table);
}

void run_command(const std::string& name, const RunConfig& cfg, std::ostream& out,
                 std::ostream& log) {
  if (name == "gen-data") cmd_gen_data(cfg, out, log);
  else if (name == "train") cmd_train(cfg, out, log);
  else if (name == "eval") cmd_eval(cfg, out, log);
  else if (name == "analyze") cmd_analyze(cfg, out, log);
  else if (name == "dump-layers") cmd_dump_layers(cfg, out, log);
  else if (name == "compare") cmd_compare(cfg, out, log);
  else fail(ErrorCode::kUsage, "unknown command '" + name + "'");
}

}  // namespace mslstm::cli
