#include <benchmark/benchmark.h>

#include "mslstm/architecture.hpp"
#include "mslstm/autograd.hpp"
#include "mslstm/cells.hpp"
#include "mslstm/rng.hpp"

using namespace mslstm;

namespace {

Tensor random_tensor(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(s);
  for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

ConvKernel random_kernel(std::size_t in, std::size_t out, std::size_t k) {
  return {random_tensor(Shape{out, in, k, k}, 1), random_tensor(Shape{1, out, 1, 1}, 2)};
}

// args: channels, kernel size
void BM_ConvForward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const Tensor x = random_tensor(Shape{4, c, 32, 32}, 3);
  const ConvKernel kernel = random_kernel(c, c, k);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_same(x, kernel));
  state.counters["flops"] = benchmark::Counter(static_cast<double>(2 * 4 * c * c * k * k * 32 * 32),
                                               benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_ConvForward)->Args({8, 3})->Args({8, 5})->Args({32, 3})->Args({32, 5});

void BM_ConvForwardBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const Tensor x = random_tensor(Shape{4, c, 32, 32}, 3);
  const ConvKernel kernel = random_kernel(c, c, k);
  for (auto _ : state) {
    Tape tape;
    const Var xv = tape.variable(x);
    const Var y = conv2d_same(tape, xv, tape.bind(kernel));
    tape.backward(sum(tape, y));
    benchmark::DoNotOptimize(tape.grad(xv));
  }
}
BENCHMARK(BM_ConvForwardBackward)->Args({8, 3})->Args({8, 5})->Args({32, 3});

void BM_CellStep(benchmark::State& state) {
  const auto kind = static_cast<CellKind>(state.range(0));
  const auto hidden = static_cast<std::size_t>(state.range(1));
  const CellParams params = init_params(kind, hidden, hidden, {}, 7);
  const Tensor x = random_tensor(Shape{4, hidden, 32, 32}, 4);
  for (auto _ : state) {
    Tape tape;
    const BoundCell cell = mslstm::bind(tape, params);
    const auto [h, next] = cell_step(tape, cell, tape.variable(x), zero_state(tape, kind, 4, hidden, 32, 32));
    tape.backward(sum(tape, h));
    benchmark::ClobberMemory();
  }
  state.SetLabel(std::string(cell_kind_name(kind)));
}
BENCHMARK(BM_CellStep)
    ->Args({static_cast<int>(CellKind::kConv), 8})
    ->Args({static_cast<int>(CellKind::kMultiKernel), 8})
    ->Args({static_cast<int>(CellKind::kConv), 32})
    ->Args({static_cast<int>(CellKind::kMultiKernel), 32});

// One training-style pass: 10 steps of a preset, batch 4, 32x32 frames.
void BM_PresetRollout(benchmark::State& state, const char* name) {
  const ArchitectureConfig cfg = preset(name, 8, 1);
  const Model model = Model::build(cfg, 0);
  std::vector<Tensor> frames;
  for (std::size_t t = 0; t < 5; ++t) frames.push_back(random_tensor(Shape{4, 1, 32, 32}, 10 + t));
  for (auto _ : state) {
    Tape tape;
    const BoundModel bm = mslstm::bind(tape, model);
    std::vector<Var> inputs;
    for (const Tensor& f : frames) inputs.push_back(tape.constant(f));
    const std::vector<Var> preds = rollout(tape, cfg, bm, inputs, 5);
    Var total = sum(tape, preds.front());
    for (std::size_t i = 1; i < preds.size(); ++i) total = add(tape, total, sum(tape, preds[i]));
    tape.backward(total);
    benchmark::ClobberMemory();
  }
}
BENCHMARK_CAPTURE(BM_PresetRollout, convlstm6, "convlstm6")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_PresetRollout, ms6, "ms6")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
