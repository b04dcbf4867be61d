#include "mslstm/training.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <utility>

#include "mslstm/checkpoint.hpp"
#include "mslstm/error.hpp"
#include "mslstm/rng.hpp"

namespace mslstm {
namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ull;

void check_dataset(const SequenceDataset& data, const ArchitectureConfig& arch,
                   const SequenceSpec& seq) {
  if (data.frames() < seq.total()) {
    fail(ErrorCode::kUsage, "dataset has " + std::to_string(data.frames()) +
                                " frames per sequence, spec needs m + n = " +
                                std::to_string(seq.total()));
  }
  if (data.channels() != arch.input_channels) {
    fail(ErrorCode::kUsage, "dataset has " + std::to_string(data.channels()) +
                                " channels, model expects " + std::to_string(arch.input_channels));
  }
  if (data.count() == 0) fail(ErrorCode::kUsage, "dataset is empty");
}

double sign(double e) { return e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0); }

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorCode::kConfig, "lr must be positive");
  if (batch < 1) fail(ErrorCode::kConfig, "batch must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail(ErrorCode::kConfig, "adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) fail(ErrorCode::kConfig, "adam eps must be positive");
}

Var loss_l1l2(Tape& tape, std::span<const Var> pred, std::span<const Tensor> target) {
  if (pred.size() != target.size() || pred.empty()) {
    fail(ErrorCode::kShape, "loss needs matching non-empty frame lists, got " +
                                std::to_string(pred.size()) + " and " +
                                std::to_string(target.size()));
  }
  std::size_t total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    require_same_shape(tape.value(pred[i]), target[i], "loss_l1l2");
    total += target[i].size();
  }
  const double inv = 1.0 / static_cast<double>(total);
  Var acc;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Var p = pred[i];
    const Tensor& pv = tape.value(p);
    double s = 0.0;
    for (std::size_t j = 0; j < pv.size(); ++j) {
      const double e = pv.data()[j] - target[i].data()[j];
      s += std::abs(e) + e * e;
    }
    const Var term = tape.record(
        Tensor::scalar(s * inv), std::array{p},
        [p, t = target[i], inv](Tape& tp, const Tensor& g) {
          const Tensor& v = tp.value(p);
          Tensor gp = Tensor::uninitialized(v.shape());
          const double scale = g.item() * inv;
          for (std::size_t j = 0; j < v.size(); ++j) {
            const double e = v.data()[j] - t.data()[j];
            gp.data()[j] = scale * (sign(e) + 2.0 * e);
          }
          tp.accumulate(p, std::move(gp));
        });
    acc = acc.valid() ? add(tape, acc, term) : term;
  }
  return acc;
}

double loss_l1l2(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "loss_l1l2");
  if (pred.size() == 0) return 0.0;
  double l1 = 0.0, l2 = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred.data()[i] - target.data()[i];
    l1 += std::abs(e);
    l2 += e * e;
  }
  const double n = static_cast<double>(pred.size());
  return l1 / n + l2 / n;
}

Trainer::Trainer(const ArchitectureConfig& arch, const SequenceSpec& seq, const TrainConfig& cfg)
    : arch_(arch), seq_(seq), cfg_(cfg) {
  arch_.validate();
  seq_.validate();
  cfg_.validate();
  model_ = Model::build(arch_, cfg_.seed);
  auto params = model_.parameters();
  std::vector<Tensor*> ptrs;
  for (auto& p : params) ptrs.push_back(p.value);
  adam_ = AdamState::like(ptrs);
}

Trainer::Trainer(const Checkpoint& ck, const TrainConfig& cfg)
    : arch_(ck.arch), seq_(ck.seq), cfg_(cfg), model_(ck.model), adam_(ck.adam), epoch_(ck.epoch) {
  cfg_.validate();
  if (config_digest(arch_, seq_, cfg_) != config_digest(ck.arch, ck.seq, ck.cfg)) {
    fail(ErrorCode::kConfig, "resume config differs from the checkpoint (only epochs may change)");
  }
}

std::vector<std::size_t> Trainer::epoch_order(std::uint64_t seed, std::size_t epoch,
                                              std::size_t count) {
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(derive_seed(derive_seed(seed, kShuffleStream), epoch));
  for (std::size_t i = count; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

double Trainer::train_step(const SequenceDataset& data, std::span<const std::size_t> batch) {
  check_dataset(data, arch_, seq_);
  Tape tape(true);
  const BoundModel bm = bind(tape, model_);
  std::vector<Var> inputs;
  for (std::size_t t = 0; t < seq_.m; ++t) inputs.push_back(tape.constant(data.frame_batch(batch, t)));
  const std::vector<Var> preds = rollout(tape, arch_, bm, inputs, seq_.n);
  std::vector<Tensor> targets;
  for (std::size_t t = seq_.m; t < seq_.total(); ++t) targets.push_back(data.frame_batch(batch, t));
  const Var loss = loss_l1l2(tape, preds, targets);
  const double value = tape.value(loss).item();
  if (!std::isfinite(value)) {
    fail(ErrorCode::kNumeric, "non-finite loss at optimizer step " + std::to_string(adam_.t + 1));
  }
  tape.backward(loss);

  auto params = model_.parameters();
  std::vector<Tensor*> ptrs;
  std::vector<Tensor> grads;
  for (std::size_t i = 0; i < params.size(); ++i) {
    ptrs.push_back(params[i].value);
    grads.push_back(tape.grad(bm.params[i]));
    if (!grads.back().all_finite()) {
      fail(ErrorCode::kNumeric, "non-finite gradient for " + params[i].name + " at optimizer step " +
                                    std::to_string(adam_.t + 1));
    }
  }
  adam_step(ptrs, grads, adam_, cfg_.adam());
  for (const NamedTensor& p : params) {
    if (!p.value->all_finite()) {
      fail(ErrorCode::kNumeric, "parameter " + p.name + " became non-finite at optimizer step " +
                                    std::to_string(adam_.t));
    }
  }
  return value;
}

EpochLog Trainer::run_epoch(const SequenceDataset& data) {
  check_dataset(data, arch_, seq_);
  const auto start = std::chrono::steady_clock::now();
  const auto order = epoch_order(cfg_.seed, epoch_, data.count());
  double weighted = 0.0;
  for (std::size_t first = 0; first < order.size(); first += cfg_.batch) {
    const std::size_t count = std::min(cfg_.batch, order.size() - first);
    const std::span<const std::size_t> batch(order.data() + first, count);
    weighted += train_step(data, batch) * static_cast<double>(count);
  }
  ++epoch_;
  EpochLog log;
  log.epoch = epoch_;
  log.mean_loss = weighted / static_cast<double>(order.size());
  log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return log;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ck;
  ck.arch = arch_;
  ck.seq = seq_;
  ck.cfg = cfg_;
  ck.model = model_;
  ck.adam = adam_;
  ck.epoch = epoch_;
  ck.shuffle_seed = derive_seed(cfg_.seed, kShuffleStream);
  return ck;
}

std::vector<EpochLog> train(Trainer& trainer, const SequenceDataset& data,
                            const EpochCallback& on_epoch) {
  std::vector<EpochLog> logs;
  while (trainer.epoch() < trainer.config().epochs) {
    logs.push_back(trainer.run_epoch(data));
    if (on_epoch) on_epoch(trainer, logs.back());
  }
  return logs;
}

Predictor model_predictor(const Model& model) {
  return [&model](std::span<const Tensor> frames, std::size_t m, std::size_t n) {
    Tape tape(false);
    const BoundModel bm = bind(tape, model);
    std::vector<Var> inputs;
    for (std::size_t t = 0; t < m; ++t) inputs.push_back(tape.constant(frames[t]));
    std::vector<Tensor> out;
    for (Var v : rollout(tape, model.config(), bm, inputs, n)) out.push_back(tape.value(v));
    return out;
  };
}

Predictor copy_last_predictor() {
  return [](std::span<const Tensor> frames, std::size_t m, std::size_t n) {
    return std::vector<Tensor>(n, frames[m - 1]);
  };
}

Predictor oracle_predictor() {
  return [](std::span<const Tensor> frames, std::size_t m, std::size_t n) {
    return std::vector<Tensor>(frames.begin() + static_cast<std::ptrdiff_t>(m),
                               frames.begin() + static_cast<std::ptrdiff_t>(m + n));
  };
}

MetricReport evaluate(const Predictor& predictor, const SequenceDataset& data,
                      const SequenceSpec& seq, const EvalOptions& options) {
  seq.validate();
  if (seq.m < 1) fail(ErrorCode::kUsage, "evaluation needs m >= 1");
  if (data.frames() < seq.total()) {
    fail(ErrorCode::kUsage, "dataset has " + std::to_string(data.frames()) +
                                " frames per sequence, spec needs " + std::to_string(seq.total()));
  }
  const std::size_t batch = std::max<std::size_t>(1, options.batch);
  MetricAccumulator acc(seq.n, options.thresholds);
  std::vector<std::size_t> idx;
  for (std::size_t first = 0; first < data.count(); first += batch) {
    idx.clear();
    for (std::size_t s = first; s < std::min(first + batch, data.count()); ++s) idx.push_back(s);
    std::vector<Tensor> frames;
    for (std::size_t t = 0; t < seq.total(); ++t) frames.push_back(data.frame_batch(idx, t));
    std::vector<Tensor> preds = predictor(frames, seq.m, seq.n);
    if (preds.size() != seq.n) {
      fail(ErrorCode::kShape, "predictor returned " + std::to_string(preds.size()) +
                                  " frames, expected " + std::to_string(seq.n));
    }
    for (std::size_t t = 0; t < seq.n; ++t) {
      for (double& v : preds[t].data()) v = std::clamp(v, 0.0, 1.0);
      acc.add(t, preds[t], frames[seq.m + t]);
    }
  }
  return acc.report();
}

}  // namespace mslstm
