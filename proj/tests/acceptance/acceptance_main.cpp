// Acceptance checks, one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "metric_oracles.hpp"
#include "mslstm/checkpoint.hpp"
#include "mslstm/cost_model.hpp"
#include "mslstm/datasets.hpp"
#include "mslstm/glyphs.hpp"
#include "mslstm/gradcheck.hpp"
#include "mslstm/metrics.hpp"
#include "mslstm/rng.hpp"
#include "mslstm/tensor_file.hpp"
#include "mslstm/training.hpp"
#include "oracles.hpp"

using namespace mslstm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Summary rows of `mslstm analyze`, keyed by preset then column.
std::map<std::string, std::map<std::string, std::string>> analyze_rows(
    const std::vector<std::pair<std::string, std::string>>& values = {}) {
  RunConfig cfg = cli::default_config(cli::command_spec("analyze"));
  for (const auto& [k, v] : values) cfg.set(k, v);
  std::ostringstream out, log;
  cli::run_command("analyze", cfg, out, log);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);  // "# b = ..."
  std::getline(in, line);
  std::vector<std::string> header;
  std::stringstream hs(line);
  for (std::string f; std::getline(hs, f, ',');) header.push_back(f);
  std::map<std::string, std::map<std::string, std::string>> rows;
  while (std::getline(in, line) && !line.empty()) {
    std::stringstream ls(line);
    std::map<std::string, std::string> row;
    std::size_t i = 0;
    for (std::string f; std::getline(ls, f, ',') && i < header.size(); ++i) row[header[i]] = f;
    rows[row["preset"]] = row;
  }
  return rows;
}

std::uint64_t u64(const std::string& s) { return std::stoull(s); }

Outcome parameter_accounting() {
  Outcome o;
  auto rows = analyze_rows();
  for (const auto& [name, expected] :
       {std::pair{"convlstm6", 442368ull}, std::pair{"sms6", 442368ull},
        std::pair{"tms6", 1892352ull}, std::pair{"ms6", 1892352ull}}) {
    auto& r = rows[name];
    o.require(u64(r["cell_params"]) == expected, std::string(name) + " cell_params " + r["cell_params"]);
    o.require(r["cell_params"] == r["cell_params_closed_form"], std::string(name) + " closed form differs");
  }
  o.require(rows["sms6"]["cell_params"] == rows["convlstm6"]["cell_params"], "sms6 != convlstm6");
  o.require(rows["ms6"]["cell_params"] == rows["tms6"]["cell_params"], "ms6 != tms6");
  // Enumerated model parameters equal the per-layer closed forms summed.
  for (const std::string& name : preset_names()) {
    const ArchitectureConfig arch = preset(name, 32, 32);
    std::uint64_t closed = 0;
    for (const LayerSpec& l : arch.layers) closed += closed_form_cell_params(l.kind, l.hidden, arch.kernels);
    const CostReport r = cost_report(arch, CostInput{}, 1);
    o.require(r.params == closed, name + " enumeration " + std::to_string(r.params));
  }
  o.detail = o.pass ? "convlstm6 " + rows["convlstm6"]["cell_params"] + ", ms6 " + rows["ms6"]["cell_params"]
                    : o.detail;
  return o;
}

Outcome flops_ratio() {
  Outcome o;
  auto rows = analyze_rows();
  const double conv = static_cast<double>(u64(rows["convlstm6"]["flops"]));
  const double sms = static_cast<double>(u64(rows["sms6"]["flops"]));
  const double tms = static_cast<double>(u64(rows["tms6"]["flops"]));
  const double ms = static_cast<double>(u64(rows["ms6"]["flops"]));
  o.require(sms / conv == 0.4375, "sms6/convlstm6 = " + num(sms / conv));
  o.require(ms / tms == 0.4375, "ms6/tms6 = " + num(ms / tms));
  const double table = 15.1 / 34.4;
  o.require(std::fabs(sms / conv - table) / table < 0.02, "outside 2% of 15.1/34.4");
  if (o.pass) o.detail = "sms6/convlstm6 = ms6/tms6 = " + num(sms / conv) + ", table " + num(table);
  return o;
}

// M_all = 4 M_par + 2 M_out where M_out is linear in b*h*w; the ordering then
// follows from M_par(pyramid) == M_par(flat) and a smaller M_out coefficient.
// Both facts are checked, plus the linearity on a grid of shapes.
Outcome memory_ordering() {
  Outcome o;
  for (auto [flat, pyr] : {std::pair{"convlstm6", "sms6"}, std::pair{"tms6", "ms6"}}) {
    const CostReport f1 = cost_report(preset(flat), CostInput{1, 4, 4}, 1);
    const CostReport p1 = cost_report(preset(pyr), CostInput{1, 4, 4}, 1);
    o.require(f1.m_par == p1.m_par, std::string(pyr) + " m_par differs");
    o.require(p1.m_out < f1.m_out, std::string(pyr) + " m_out coefficient not smaller");
    for (std::size_t b : {1, 3}) {
      for (std::size_t h : {4, 36}) {
        for (std::size_t w : {8, 64}) {
          const std::uint64_t scale = b * (h / 4) * (w / 4);
          const CostReport f = cost_report(preset(flat), CostInput{b, h, w}, 1);
          const CostReport p = cost_report(preset(pyr), CostInput{b, h, w}, 1);
          o.require(f.m_out == scale * f1.m_out && p.m_out == scale * p1.m_out, "m_out not linear in b*h*w");
          o.require(f.m_all == 4 * f.m_par + 2 * f.m_out, "m_all formula");
          o.require(p.m_all < f.m_all, std::string(pyr) + " !< " + flat + " at " + std::to_string(h) + "x" +
                                           std::to_string(w));
        }
      }
    }
  }
  if (o.pass) o.detail = "sms6 < convlstm6 and ms6 < tms6 for all b, h, w divisible by 4";
  return o;
}

Outcome receptive_fields() {
  Outcome o;
  const std::size_t conv = encoder_receptive_field(preset("convlstm6"));
  const std::size_t sms = encoder_receptive_field(preset("sms6"));
  const std::size_t ms = encoder_receptive_field(preset("ms6"));
  auto rows = analyze_rows();
  o.require(rows["convlstm6"]["encoder_rf"] == std::to_string(conv), "analyze disagrees");
  o.require(conv == 7, "convlstm6 rf " + std::to_string(conv));
  o.require(sms >= 15, "sms6 rf " + std::to_string(sms));
  o.require(ms > sms && sms > conv, "ordering");
  if (o.pass)
    o.detail = "convlstm6 " + std::to_string(conv) + ", sms6 " + std::to_string(sms) + ", ms6 " + std::to_string(ms);
  return o;
}

Outcome gradient_suite() {
  Outcome o;
  double worst = 0.0;
  std::string worst_name;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::uint64_t s0 = seed * 100;
    const Shape s{2, 2, 4, 4};
    const Tensor w = oracle::random_tensor(s, s0 + 1);
    const Tensor w_half = oracle::random_tensor(Shape{2, 2, 2, 2}, s0 + 2);
    const Tensor w_double = oracle::random_tensor(Shape{2, 2, 8, 8}, s0 + 3);
    const Tensor w_cat = oracle::random_tensor(Shape{2, 4, 4, 4}, s0 + 4);
    const Tensor w_conv = oracle::random_tensor(Shape{2, 3, 4, 4}, s0 + 5);
    const Tensor a = oracle::random_tensor(s, s0 + 6);
    const Tensor b = oracle::random_tensor(s, s0 + 7);
    const Tensor k3 = oracle::random_tensor(Shape{3, 2, 3, 3}, s0 + 8);
    const Tensor k5 = oracle::random_tensor(Shape{3, 2, 5, 5}, s0 + 9);
    const Tensor k1 = oracle::random_tensor(Shape{3, 2, 1, 1}, s0 + 10);
    const Tensor k3b = oracle::random_tensor(Shape{3, 2, 3, 3}, s0 + 18);
    const Tensor kb = oracle::random_tensor(Shape{1, 3, 1, 1}, s0 + 11);
    const Tensor kb2 = oracle::random_tensor(Shape{1, 3, 1, 1}, s0 + 12);

    struct Case {
      std::string name;
      TapeFunction fn;
      std::vector<Tensor> inputs;
    };
    std::vector<Case> cases{
        {"sigmoid", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, sigmoid(t, v[0]), w); }, {a}},
        {"tanh", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, mslstm::tanh(t, v[0]), w); }, {a}},
        {"hadamard", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, hadamard(t, v[0], v[1]), w); }, {a, b}},
        {"add", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, add(t, v[0], v[1]), w); }, {a, b}},
        {"concat", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, concat_channels(t, v[0], v[1]), w_cat); }, {a, b}},
        {"slice", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, slice_channels(t, concat_channels(t, v[0], v[1]), 1, 2), w); }, {a, b}},
        {"maxpool", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, maxpool2(t, v[0]), w_half); }, {a}},
        {"upsample", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, upsample_bilinear2(t, v[0]), w_double); }, {a}},
        {"sum", [&](Tape& t, std::span<const Var> v) { return sum(t, hadamard(t, v[0], v[0])); }, {a}},
        {"conv1", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, conv2d_same(t, v[0], BoundKernel{v[1], v[2]}), w_conv); }, {a, k1, kb}},
        {"conv3", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, conv2d_same(t, v[0], BoundKernel{v[1], v[2]}), w_conv); }, {a, k3, kb}},
        {"conv5", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, conv2d_same(t, v[0], BoundKernel{v[1], v[2]}), w_conv); }, {a, k5, kb}},
        {"conv_packed", [&](Tape& t, std::span<const Var> v) {
           const Var x = concat_channels(t, v[0], v[1]);
           const std::array<ConvGroup, 1> groups{ConvGroup{{ConvTerm{BoundKernel{v[2], v[4]}, 0},
                                                             ConvTerm{BoundKernel{v[3], v[5]}, 2}}}};
           return weighted_sum(t, conv2d_packed(t, x, groups), w_conv);
         }, {a, b, k3, k3b, kb, kb2}},
    };
    for (CellKind kind : {CellKind::kConv, CellKind::kMultiKernel}) {
      const CellParams p = init_params(kind, 2, 2, {}, seed);
      const Shape hs{1, 2, 4, 4};
      const Tensor hw = oracle::random_tensor(hs, s0 + 13);
      cases.push_back({std::string(cell_kind_name(kind)) + "_step",
                       [p, hw, kind](Tape& t, std::span<const Var> v) {
                         const BoundCell cell = mslstm::bind(t, p);
                         CellState st = zero_state(t, kind, 1, 2, 4, 4);
                         if (auto* cs = std::get_if<ConvState>(&st)) {
                           cs->h = v[1];
                           cs->c = v[2];
                         } else {
                           auto& ms = std::get<MKState>(st);
                           ms.h = v[1];
                           ms.c = v[2];
                           ms.c_tilde = v[3];
                         }
                         auto [h1, s1] = cell_step(t, cell, v[0], st);
                         auto [h2, s2] = cell_step(t, cell, h1, s1);
                         return weighted_sum(t, h2, hw);
                       },
                       {oracle::random_tensor(hs, s0 + 14), oracle::random_tensor(hs, s0 + 15),
                        oracle::random_tensor(hs, s0 + 16), oracle::random_tensor(hs, s0 + 17)}});
    }
    for (const Case& c : cases) {
      const double err = check_tape_gradients(c.fn, c.inputs).max_rel_error;
      if (err > worst) {
        worst = err;
        worst_name = c.name + " seed " + std::to_string(seed);
      }
    }
  }
  o.require(worst < 1e-4, "worst " + num(worst) + " at " + worst_name);
  if (o.pass) o.detail = "15 checks x 20 seeds, worst rel err " + num(worst) + " (" + worst_name + ")";
  return o;
}

// Toy learnability setup.
constexpr std::size_t kToyTrain = 1000;
constexpr std::size_t kToyTest = 200;
constexpr std::size_t kToyCanvas = 32;
constexpr std::size_t kToyGlyph = 14;
constexpr std::size_t kToyM = 5;
constexpr std::size_t kToyN = 5;
constexpr std::size_t kToyHidden = 8;
constexpr std::size_t kToyEpochs = 5;
constexpr double kToyLr = 3e-4;

Outcome learnability() {
  Outcome o;
  MovingSpec spec;
  spec.digits_per_frame = 1;
  spec.frames = kToyM + kToyN;
  spec.canvas = kToyCanvas;
  spec.glyph_size = kToyGlyph;
  spec.speed_min = 1.0;
  spec.speed_max = 3.0;
  spec.count = kToyTrain;
  spec.seed = 11;
  const GlyphSet train_glyphs = prepare_glyphs(spec, procedural_glyphs(1000, 7));
  const GlyphSet test_glyphs = prepare_glyphs(spec, procedural_glyphs(1000, 8));
  const SequenceDataset train_set = generate_moving(spec, train_glyphs, "train");
  spec.count = kToyTest;
  spec.seed = 12;
  const SequenceDataset test_set = generate_moving(spec, test_glyphs, "test");
  const SequenceSpec seq{kToyM, kToyN};

  std::size_t wins = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::map<std::string, double> mse;
    for (const char* name : {"convlstm6", "ms6"}) {
      TrainConfig cfg;
      cfg.lr = kToyLr;
      cfg.epochs = kToyEpochs;
      cfg.seed = seed;
      Trainer trainer(preset(name, kToyHidden, 1), seq, cfg);
      train(trainer, train_set);
      mse[name] = evaluate(model_predictor(trainer.model()), test_set, seq).overall.mse;
    }
    const double gain = 1.0 - mse["ms6"] / mse["convlstm6"];
    if (gain >= 0.10) ++wins;
    const std::string line = "seed " + std::to_string(seed) + " convlstm6 " + num(mse["convlstm6"]) + " ms6 " +
                             num(mse["ms6"]) + " (" + num(100 * gain) + "% lower)";
    std::fprintf(stderr, "  learnability %s\n", line.c_str());
    detail += (detail.empty() ? "" : "; ") + line;
  }
  o.require(wins >= 2, std::to_string(wins) + "/3 seeds with >= 10% lower MSE: " + detail);
  if (o.pass) o.detail = std::to_string(wins) + "/3 seeds: " + detail;
  return o;
}

Outcome metric_oracles() {
  Outcome o;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor a = oracle::random_tensor(Shape{2, 1, 16, 16}, seed, 0.0, 1.0);
    const Tensor b = oracle::random_tensor(Shape{2, 1, 16, 16}, seed + 1000, 0.0, 1.0);
    worst = std::max({worst, std::fabs(mse(a, b) - oracle::mse(a, b)), std::fabs(mae(a, b) - oracle::mae(a, b)),
                      std::fabs(ssim(a, b) - oracle::ssim(a, b)), std::fabs(psnr(a, b) - oracle::psnr(a, b))});
    o.require(std::fabs(ssim(a, a) - 1.0) < 1e-12, "ssim(x, x) != 1");
    const ContingencyTable perfect = contingency(a, a, 0.3);
    o.require(csi(perfect) == 1.0 && hss(perfect) == 1.0, "perfect forecast CSI/HSS != 1");
    // Hand tally of the table.
    ContingencyTable hand;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const bool p = a.data()[i] >= 0.5, q = b.data()[i] >= 0.5;
      (p && q ? hand.tp : p ? hand.fp : q ? hand.fn : hand.tn) += 1;
    }
    o.require(contingency(a, b, 0.5) == hand, "contingency table differs");
  }
  o.require(worst < 1e-9, "max deviation " + num(worst));
  const ContingencyTable t{30, 10, 20, 140};
  o.require(csi(t) == 30.0 / 60.0, "csi");
  o.require(hss(t) == 8000.0 / 14000.0, "hss");
  if (o.pass) o.detail = "max deviation " + num(worst) + " over 20 frame pairs";
  return o;
}

std::vector<double> scalar_bounce(double x, double v, double wall, std::size_t frames) {
  std::vector<double> out;
  for (std::size_t t = 0; t < frames; ++t) {
    out.push_back(x);
    x += v;
    if (x > wall) {
      x = 2.0 * wall - x;
      v = -v;
    }
    if (x < 0.0) {
      x = -x;
      v = -v;
    }
  }
  return out;
}

Outcome data_round_trips() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "mslstm_acceptance_data";
  fs::remove_all(dir);
  fs::create_directories(dir);
  NdArray arr{{2, 3, 1, 4, 5}, {}};
  Rng rng(9);
  for (std::size_t i = 0; i < 120; ++i) arr.data.push_back(rng.uniform(-1e6, 1e6));
  arr.data[0] = -0.0;
  arr.data[1] = std::numeric_limits<double>::denorm_min();
  arr.data[2] = std::numeric_limits<double>::max();
  write_tensor(dir / "a.mslt", arr);
  const NdArray back = read_tensor(dir / "a.mslt");
  o.require(back.dims == arr.dims && std::memcmp(back.data.data(), arr.data.data(), 120 * sizeof(double)) == 0,
            "MSLT round trip not bit-identical");

  // Right edge at 60 moving +3 against the 63 wall on a 64 canvas with 28 px glyphs.
  const auto edge = scalar_bounce(60.0 - 27.0, 3.0, 36.0, 4);
  AxisMotion m{33.0, 3.0};
  for (std::size_t t = 0; t < edge.size(); ++t) {
    o.require(m.position == edge[t], "axis motion diverges at t=" + std::to_string(t));
    advance_axis(m, 36.0);
  }
  o.require(edge[1] + 27 == 63 && edge[2] + 27 == 60 && edge[3] + 27 == 57, "bounce oracle");

  MovingSpec spec;
  spec.count = 20;
  spec.frames = 20;
  spec.seed = 4;
  const GlyphSet glyphs = prepare_glyphs(spec, procedural_glyphs(50, 2));
  const double lim = static_cast<double>(spec.canvas - spec.glyph_size);
  for (std::size_t s = 0; s < spec.count; ++s) {
    Rng r(derive_seed(spec.seed, s));
    for (const DigitTrack& tr : sample_tracks(spec, glyphs.size(), spec.glyph_size, spec.glyph_size, s)) {
      r.below(glyphs.size());
      const double x = r.uniform(0.0, lim), y = r.uniform(0.0, lim);
      const double speed = r.uniform(spec.speed_min, spec.speed_max);
      const double angle = r.uniform(0.0, 2.0 * M_PI);
      o.require(tr.x == scalar_bounce(x, speed * std::cos(angle), lim, spec.frames) &&
                    tr.y == scalar_bounce(y, speed * std::sin(angle), lim, spec.frames),
                "trajectory differs from scalar oracle in sequence " + std::to_string(s));
    }
  }
  const SequenceDataset ds = generate_moving(spec, glyphs, "train");
  const auto [lo, hi] = std::minmax_element(ds.array().data.begin(), ds.array().data.end());
  o.require(*lo >= 0.0 && *hi <= 1.0, "pixel outside [0, 1]");
  AdvectionSpec adv;
  adv.count = 4;
  const SequenceDataset blobs = generate_advection(adv, "train");
  const auto [blo, bhi] = std::minmax_element(blobs.array().data.begin(), blobs.array().data.end());
  o.require(*blo >= 0.0 && *bhi <= 1.0, "advection pixel outside [0, 1]");

  ds.save(dir / "first.mslt");
  generate_moving(spec, glyphs, "train").save(dir / "second.mslt");
  o.require(read_file_bytes(dir / "first.mslt") == read_file_bytes(dir / "second.mslt"),
            "regeneration not byte-identical");
  if (o.pass) o.detail = "MSLT bits, 20 trajectories, pixel range and regeneration verified";
  return o;
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path other = b / fs::relative(e.path(), a);
    if (!fs::exists(other) || read_file_bytes(e.path()) != read_file_bytes(other)) return false;
  }
  std::size_t other_files = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) other_files += e.is_regular_file();
  return files > 0 && files == other_files;
}

Outcome determinism_and_resume() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "mslstm_acceptance_resume";
  fs::remove_all(dir);
  MovingSpec spec;
  spec.count = 12;
  spec.frames = 6;
  spec.canvas = 16;
  spec.glyph_size = 7;
  spec.digits_per_frame = 1;
  spec.speed_min = 1.0;
  spec.speed_max = 2.0;
  spec.seed = 2;
  const SequenceDataset data = generate_moving(spec, prepare_glyphs(spec, procedural_glyphs(20, 5)), "train");
  const SequenceSpec seq{3, 3};
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 17;
  cfg.lr = 1e-3;

  for (const char* name : {"sms6", "ms6"}) {
    const std::string p = name;
    Trainer a(preset(name, 3, 1), seq, cfg);
    Trainer b(preset(name, 3, 1), seq, cfg);
    train(a, data);
    train(b, data);
    save_checkpoint(a.checkpoint(), dir / (p + "_a"));
    save_checkpoint(b.checkpoint(), dir / (p + "_b"));
    o.require(same_tree(dir / (p + "_a"), dir / (p + "_b")), p + " identical runs differ");

    for (std::size_t k = 1; k < cfg.epochs; ++k) {
      TrainConfig first = cfg;
      first.epochs = k;
      Trainer part(preset(name, 3, 1), seq, first);
      train(part, data);
      const fs::path mid = dir / (p + "_mid" + std::to_string(k));
      save_checkpoint(part.checkpoint(), mid);
      Trainer resumed(load_checkpoint(mid), cfg);
      train(resumed, data);
      const fs::path end = dir / (p + "_resumed" + std::to_string(k));
      save_checkpoint(resumed.checkpoint(), end);
      o.require(same_tree(dir / (p + "_a"), end), p + " resume after epoch " + std::to_string(k) + " differs");
    }
  }
  if (o.pass) o.detail = "sms6 and ms6: repeated runs and resume after epochs 1, 2 are bit-identical";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"parameter accounting", parameter_accounting},
      {"FLOPs ratio", flops_ratio},
      {"memory ordering", memory_ordering},
      {"receptive fields", receptive_fields},
      {"gradient suite", gradient_suite},
      {"learnability", learnability},
      {"metric oracles", metric_oracles},
      {"data round trips", data_round_trips},
      {"determinism and resume", determinism_and_resume},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoul(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.count(i + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
