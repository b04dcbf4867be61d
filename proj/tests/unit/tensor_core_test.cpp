#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "mslstm/autograd.hpp"
#include "mslstm/error.hpp"
#include "mslstm/gradcheck.hpp"
#include "oracles.hpp"

using namespace mslstm;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

ConvKernel random_kernel(std::size_t in, std::size_t out, std::size_t k, std::uint64_t seed) {
  return ConvKernel{oracle::random_tensor(Shape{out, in, k, k}, seed),
                    oracle::random_tensor(Shape{1, out, 1, 1}, seed + 1)};
}

}  // namespace

TEST(Tensor, ShapeAndAccess) {
  Tensor t(Shape{2, 3, 4, 5}, 1.5);
  EXPECT_EQ(t.size(), 120u);
  EXPECT_DOUBLE_EQ(t.at(1, 2, 3, 4), 1.5);
  t.at(1, 2, 3, 4) = 7.0;
  EXPECT_EQ(t.data().back(), 7.0);
  EXPECT_EQ(t.plane(1, 0), t.data().data() + 60);
}

TEST(Tensor, DataLengthMismatchIsShapeError) {
  EXPECT_EQ(code_of([] { Tensor(Shape{1, 1, 2, 2}, std::vector<double>(3)); }), ErrorCode::kShape);
}

TEST(Tensor, SliceBatchCopiesItems) {
  Tensor t = oracle::random_tensor(Shape{4, 2, 3, 3}, 5);
  Tensor s = slice_batch(t, 1, 2);
  EXPECT_EQ(s.shape(), (Shape{2, 2, 3, 3}));
  EXPECT_EQ(s.at(0, 1, 2, 2), t.at(1, 1, 2, 2));
  EXPECT_EQ(s.at(1, 0, 0, 0), t.at(2, 0, 0, 0));
}

TEST(Tensor, ReductionsAndItem) {
  Tensor t(Shape{1, 1, 1, 4}, std::vector<double>{1, -3, 2, 4});
  EXPECT_DOUBLE_EQ(sum(t), 4.0);
  EXPECT_DOUBLE_EQ(mean(t), 1.0);
  EXPECT_DOUBLE_EQ(max_abs(t), 4.0);
  EXPECT_EQ(code_of([&] { (void)t.item(); }), ErrorCode::kShape);
  EXPECT_DOUBLE_EQ(Tensor::scalar(2.5).item(), 2.5);
}

class ConvMatchesLoops : public ::testing::TestWithParam<std::size_t> {};

TEST_P(ConvMatchesLoops, AgainstNaive) {
  const std::size_t k = GetParam();
  const Tensor x = oracle::random_tensor(Shape{2, 3, 7, 6}, 11);
  const ConvKernel kern = random_kernel(3, 4, k, 12);
  const Tensor y = conv2d_same(x, kern);
  const Tensor ref = oracle::conv(x, kern.weight, kern.bias);
  EXPECT_LT(oracle::max_abs_diff(y, ref), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Kernels, ConvMatchesLoops, ::testing::Values(1, 3, 5, 7));

TEST(Conv, TallImageCrossesBands) {
  // Enough rows that the im2col band is smaller than the image.
  const Tensor x = oracle::random_tensor(Shape{1, 16, 96, 40}, 3);
  const ConvKernel kern = random_kernel(16, 2, 3, 4);
  EXPECT_LT(oracle::max_abs_diff(conv2d_same(x, kern), oracle::conv(x, kern.weight, kern.bias)),
            1e-11);
}

TEST(Conv, PackedGroupsSumTheirTerms) {
  const Tensor x = oracle::random_tensor(Shape{2, 5, 6, 6}, 1);
  const ConvKernel a = random_kernel(2, 3, 3, 2);  // reads channels 0..1
  const ConvKernel b = random_kernel(3, 3, 3, 4);  // reads channels 2..4
  const ConvKernel c = random_kernel(5, 2, 3, 6);
  Tape tape(false);
  const Var xv = tape.constant(x);
  const std::array<ConvGroup, 2> groups{
      ConvGroup{{ConvTerm{tape.bind_constant(a), 0}, ConvTerm{tape.bind_constant(b), 2}}},
      ConvGroup{{ConvTerm{tape.bind_constant(c), 0}}}};
  const Tensor y = tape.value(conv2d_packed(tape, xv, groups));
  ASSERT_EQ(y.shape(), (Shape{2, 5, 6, 6}));

  Tensor x_lo(Shape{2, 2, 6, 6}), x_hi(Shape{2, 3, 6, 6});
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t ch = 0; ch < 5; ++ch)
      for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t q = 0; q < 6; ++q)
          (ch < 2 ? x_lo.at(n, ch, r, q) : x_hi.at(n, ch - 2, r, q)) = x.at(n, ch, r, q);
  const Tensor first =
      oracle::plus(oracle::conv(x_lo, a.weight, a.bias), oracle::conv(x_hi, b.weight, b.bias));
  const Tensor second = oracle::conv(x, c.weight, c.bias);
  double err = 0.0;
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t o = 0; o < 5; ++o)
      for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t q = 0; q < 6; ++q) {
          const double ref = o < 3 ? first.at(n, o, r, q) : second.at(n, o - 3, r, q);
          err = std::max(err, std::abs(ref - y.at(n, o, r, q)));
        }
  EXPECT_LT(err, 1e-12);
}

TEST(Conv, InvalidKernels) {
  EXPECT_EQ(code_of([] { ConvKernel::zeros(1, 1, 2); }), ErrorCode::kConfig);
  const Tensor x(Shape{1, 2, 4, 4});
  EXPECT_EQ(code_of([&] { conv2d_same(x, ConvKernel::zeros(3, 1, 3)); }), ErrorCode::kShape);
  ConvKernel bad = ConvKernel::zeros(2, 2, 3);
  bad.bias = Tensor(Shape{1, 3, 1, 1});
  EXPECT_EQ(code_of([&] { conv2d_same(x, bad); }), ErrorCode::kShape);
}

TEST(Resample, MaxpoolAndUpsampleMatchLoops) {
  const Tensor x = oracle::random_tensor(Shape{2, 3, 6, 8}, 9);
  EXPECT_EQ(oracle::max_abs_diff(maxpool2(x), oracle::maxpool(x)), 0.0);
  EXPECT_LT(oracle::max_abs_diff(upsample_bilinear2(x), oracle::upsample(x)), 1e-14);
  EXPECT_EQ(code_of([] { maxpool2(Tensor(Shape{1, 1, 3, 4})); }), ErrorCode::kShape);
}

TEST(Resample, UpsampleOfConstantIsConstant) {
  const Tensor y = upsample_bilinear2(Tensor(Shape{1, 2, 3, 5}, 0.25));
  for (double v : y.data()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Activations, MatchLibmAcrossRange) {
  Tensor x(Shape{1, 1, 1, 2001});
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = -25.0 + 0.025 * static_cast<double>(i);
  x.data()[1000] = 1e-9;
  Tape tape(false);
  const Var v = tape.constant(x);
  const Tensor s = tape.value(sigmoid(tape, v));
  const Tensor t = tape.value(mslstm::tanh(tape, v));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x.data()[i];
    const double ref_s = 1.0 / (1.0 + std::exp(-xi));
    const double ref_t = std::tanh(xi);
    EXPECT_NEAR(s.data()[i], ref_s, 1e-15 + 1e-14 * std::abs(ref_s)) << xi;
    EXPECT_NEAR(t.data()[i], ref_t, 1e-15 + 1e-14 * std::abs(ref_t)) << xi;
  }
}

TEST(Activations, SaturateWithoutOverflow) {
  Tensor x(Shape{1, 1, 1, 4}, std::vector<double>{-1000, -800, 800, 1000});
  Tape tape(false);
  const Var v = tape.constant(x);
  const Tensor s = tape.value(sigmoid(tape, v));
  const Tensor t = tape.value(mslstm::tanh(tape, v));
  EXPECT_EQ(s.data()[0], 0.0);
  EXPECT_EQ(s.data()[3], 1.0);
  EXPECT_EQ(t.data()[0], -1.0);
  EXPECT_EQ(t.data()[3], 1.0);
  EXPECT_TRUE(s.all_finite() && t.all_finite());
}

TEST(Tape, BackwardNeedsScalarRoot) {
  Tape tape;
  const Var x = tape.variable(Tensor(Shape{1, 1, 2, 2}));
  EXPECT_EQ(code_of([&] { tape.backward(x); }), ErrorCode::kUsage);
  EXPECT_EQ(code_of([&] { tape.value(Var{42}); }), ErrorCode::kUsage);
}

TEST(Tape, ElementwiseShapeMismatch) {
  Tape tape;
  const Var a = tape.variable(Tensor(Shape{1, 1, 2, 2}));
  const Var b = tape.variable(Tensor(Shape{1, 2, 2, 2}));
  EXPECT_EQ(code_of([&] { add(tape, a, b); }), ErrorCode::kShape);
  EXPECT_EQ(code_of([&] { hadamard(tape, a, b); }), ErrorCode::kShape);
  EXPECT_EQ(code_of([&] { slice_channels(tape, b, 1, 2); }), ErrorCode::kShape);
}

TEST(Tape, GradientAccumulatesOverReuse) {
  Tape tape;
  const Var x = tape.variable(Tensor(Shape{1, 1, 1, 3}, std::vector<double>{1, 2, 3}));
  const Var y = add(tape, hadamard(tape, x, x), x);  // x^2 + x
  tape.backward(sum(tape, y));
  const Tensor g = tape.grad(x);
  EXPECT_DOUBLE_EQ(g.data()[0], 3.0);
  EXPECT_DOUBLE_EQ(g.data()[1], 5.0);
  EXPECT_DOUBLE_EQ(g.data()[2], 7.0);
}

TEST(Tape, ConstantsGetNoGradient) {
  Tape tape;
  const Var c = tape.constant(Tensor(Shape{1, 1, 1, 2}, 3.0));
  const Var x = tape.variable(Tensor(Shape{1, 1, 1, 2}, 2.0));
  tape.backward(sum(tape, hadamard(tape, c, x)));
  EXPECT_FALSE(tape.requires_grad(c));
  EXPECT_EQ(sum(tape.grad(c)), 0.0);
  EXPECT_EQ(sum(tape.grad(x)), 6.0);
}

TEST(Tape, DisabledTapeRecordsNoBackward) {
  Tape tape(false);
  const Var x = tape.variable(Tensor(Shape{1, 1, 1, 2}, 2.0));
  EXPECT_FALSE(tape.requires_grad(x));
  const Var s = sum(tape, x);
  tape.backward(s);
  EXPECT_EQ(sum(tape.grad(x)), 0.0);
}

TEST(GradCheck, FiniteDifferenceOfKnownFunction) {
  auto f = [](std::span<const double> p, std::vector<double>* g) {
    if (g) *g = {2 * p[0] * p[1], p[0] * p[0] + std::cos(p[1])};
    return p[0] * p[0] * p[1] + std::sin(p[1]);
  };
  const std::array<double, 2> point{0.7, -1.3};
  EXPECT_LT(finite_diff_check(f, point).max_rel_error, 1e-8);
  auto wrong = [](std::span<const double> p, std::vector<double>* g) {
    if (g) *g = {p[1], 0.0};
    return p[0] * p[0] * p[1];
  };
  EXPECT_GT(finite_diff_check(wrong, point).max_rel_error, 0.1);
}

// Every op through a random weighted sum so that each output element gets a
// distinct upstream gradient.
TEST(GradCheck, OpsOnSmallShapes) {
  const Shape s{2, 2, 4, 4};
  const Tensor w = oracle::random_tensor(s, 77);
  const Tensor w_half = oracle::random_tensor(Shape{2, 2, 2, 2}, 78);
  const Tensor w_double = oracle::random_tensor(Shape{2, 2, 8, 8}, 79);
  const Tensor w_cat = oracle::random_tensor(Shape{2, 4, 4, 4}, 80);
  const Tensor w_conv = oracle::random_tensor(Shape{2, 3, 4, 4}, 81);
  const Tensor a = oracle::random_tensor(s, 1);
  const Tensor b = oracle::random_tensor(s, 2);
  const Tensor kw = oracle::random_tensor(Shape{3, 2, 3, 3}, 3);
  const Tensor kb = oracle::random_tensor(Shape{1, 3, 1, 1}, 4);

  struct Case {
    const char* name;
    TapeFunction fn;
    std::vector<Tensor> inputs;
  };
  const std::vector<Case> cases{
      {"sigmoid", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, sigmoid(t, v[0]), w); }, {a}},
      {"tanh", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, mslstm::tanh(t, v[0]), w); }, {a}},
      {"hadamard", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, hadamard(t, v[0], v[1]), w); }, {a, b}},
      {"add", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, add(t, v[0], v[1]), w); }, {a, b}},
      {"concat", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, concat_channels(t, v[0], v[1]), w_cat); }, {a, b}},
      {"slice", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, slice_channels(t, concat_channels(t, v[0], v[1]), 1, 2), w); }, {a, b}},
      {"maxpool", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, maxpool2(t, v[0]), w_half); }, {a}},
      {"upsample", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, upsample_bilinear2(t, v[0]), w_double); }, {a}},
      {"sum", [&](Tape& t, std::span<const Var> v) { return sum(t, hadamard(t, v[0], v[0])); }, {a}},
      {"conv", [&](Tape& t, std::span<const Var> v) { return weighted_sum(t, conv2d_same(t, v[0], BoundKernel{v[1], v[2]}), w_conv); }, {a, kw, kb}},
  };
  for (const Case& c : cases) {
    const GradCheckResult r = check_tape_gradients(c.fn, c.inputs);
    EXPECT_LT(r.max_rel_error, 1e-5) << c.name << " worst index " << r.worst_index;
  }
}
