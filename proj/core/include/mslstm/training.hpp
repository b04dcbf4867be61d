#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mslstm/architecture.hpp"
#include "mslstm/datasets.hpp"
#include "mslstm/metrics.hpp"
#include "mslstm/optimizer.hpp"

namespace mslstm {

struct TrainConfig {
  double lr = 3e-4;
  std::size_t batch = 4;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  // config_error unless lr > 0 and batch >= 1.
  void validate() const;
  AdamOptions adam() const { return {lr, beta1, beta2, eps}; }
};

/// mean|e| + mean e^2 over every element of every frame, e = pred - target.
Var loss_l1l2(Tape& tape, std::span<const Var> pred, std::span<const Tensor> target);
double loss_l1l2(const Tensor& pred, const Tensor& target);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double wall_seconds = 0.0;
};

struct Checkpoint;

class Trainer {
 public:
  Trainer(const ArchitectureConfig& arch, const SequenceSpec& seq, const TrainConfig& cfg);
  // Continues from a saved state; cfg may only differ in `epochs`.
  Trainer(const Checkpoint& checkpoint, const TrainConfig& cfg);

  // One shuffled pass; throws usage_error if the dataset does not fit the
  // sequence spec, numeric_error on a non-finite loss, gradient or parameter.
  EpochLog run_epoch(const SequenceDataset& data);
  // Loss before the update.
  double train_step(const SequenceDataset& data, std::span<const std::size_t> batch);

  Checkpoint checkpoint() const;
  const Model& model() const { return model_; }
  const AdamState& adam_state() const { return adam_; }
  std::size_t epoch() const { return epoch_; }
  const TrainConfig& config() const { return cfg_; }

  // Visiting order of epoch `epoch` (0-based) for `count` sequences.
  static std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch,
                                              std::size_t count);

 private:
  ArchitectureConfig arch_;
  SequenceSpec seq_;
  TrainConfig cfg_;
  Model model_;
  AdamState adam_;
  std::size_t epoch_ = 0;
};

using EpochCallback = std::function<void(const Trainer&, const EpochLog&)>;

/// Runs epochs until trainer.config().epochs have completed.
std::vector<EpochLog> train(Trainer& trainer, const SequenceDataset& data,
                            const EpochCallback& on_epoch = {});

/// Maps all T frames of a batch of sequences to the n predicted frames
/// X_m .. X_{m+n-1}. Predictors may only look at the first m frames; the
/// oracle stub is the exception.
using Predictor = std::function<std::vector<Tensor>(std::span<const Tensor> frames,
                                                    std::size_t m, std::size_t n)>;

Predictor model_predictor(const Model& model);
Predictor copy_last_predictor();
Predictor oracle_predictor();

struct EvalOptions {
  std::size_t batch = 16;
  std::vector<double> thresholds;  // CSI/HSS thresholds; empty for none
};

/// Predictions are clamped to [0, 1] before scoring.
MetricReport evaluate(const Predictor& predictor, const SequenceDataset& data,
                      const SequenceSpec& seq, const EvalOptions& options = {});

}  // namespace mslstm
