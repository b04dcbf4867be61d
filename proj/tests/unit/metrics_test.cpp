#include <gtest/gtest.h>

#include <cmath>

#include "metric_oracles.hpp"
#include "mslstm/error.hpp"
#include "mslstm/metrics.hpp"
#include "oracles.hpp"

using namespace mslstm;

TEST(Metrics, PixelErrorsMatchLoops) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor a = oracle::random_tensor(Shape{3, 2, 16, 16}, seed, 0.0, 1.0);
    const Tensor b = oracle::random_tensor(Shape{3, 2, 16, 16}, seed + 100, 0.0, 1.0);
    EXPECT_NEAR(mse(a, b), oracle::mse(a, b), 1e-9);
    EXPECT_NEAR(mae(a, b), oracle::mae(a, b), 1e-9);
    EXPECT_NEAR(psnr(a, b), oracle::psnr(a, b), 1e-9);
    EXPECT_NEAR(ssim(a, b), oracle::ssim(a, b), 1e-9);
  }
}

TEST(Metrics, IdentityValues) {
  const Tensor a = oracle::random_tensor(Shape{2, 1, 16, 16}, 4, 0.0, 1.0);
  EXPECT_EQ(mse(a, a), 0.0);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  EXPECT_EQ(psnr(a, a), kPsnrCap);
}

TEST(Metrics, SmallFrameIsConfigError) {
  const Tensor a(Shape{1, 1, 8, 8});
  try {
    ssim(a, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(Contingency, HandCountedTable) {
  // pred: 0.6 0.2 0.9 0.4 | obs: 0.7 0.8 0.1 0.3 at tau 0.5
  const Tensor p(Shape{1, 1, 1, 4}, std::vector<double>{0.6, 0.2, 0.9, 0.4});
  const Tensor o(Shape{1, 1, 1, 4}, std::vector<double>{0.7, 0.8, 0.1, 0.3});
  const ContingencyTable t = contingency(p, o, 0.5);
  EXPECT_EQ(t, (ContingencyTable{1, 1, 1, 1}));
  EXPECT_EQ(*csi(t), 1.0 / 3.0);
  EXPECT_EQ(*hss(t), 0.0);
  // Threshold is inclusive.
  EXPECT_EQ(contingency(p, o, 0.6).tp, 1u);
}

TEST(Contingency, ScoresFromFormulas) {
  const ContingencyTable t{30, 10, 20, 140};
  EXPECT_DOUBLE_EQ(*csi(t), 0.5);
  // 2 (30*140 - 20*10) / ((30+20)(20+140) + (30+10)(10+140)) = 8000 / 14000
  EXPECT_DOUBLE_EQ(*hss(t), 8000.0 / 14000.0);
  EXPECT_FALSE(csi(ContingencyTable{0, 0, 0, 5}).has_value());
  EXPECT_FALSE(hss(ContingencyTable{0, 0, 0, 0}).has_value());
}

TEST(Contingency, PerfectForecast) {
  const Tensor a = oracle::random_tensor(Shape{2, 1, 8, 8}, 2, 0.0, 1.0);
  const ContingencyTable t = contingency(a, a, 0.4);
  EXPECT_EQ(t.fp + t.fn, 0u);
  EXPECT_EQ(*csi(t), 1.0);
  EXPECT_EQ(*hss(t), 1.0);
}

TEST(Thresholds, MappingToUnits) {
  EXPECT_DOUBLE_EQ(mm_per_hour_to_units(5.0), 0.5);
  const auto th = default_thresholds();
  ASSERT_EQ(th.size(), 3u);
  EXPECT_DOUBLE_EQ(th[0], 0.05);
  EXPECT_DOUBLE_EQ(th[1], 0.2);
  EXPECT_DOUBLE_EQ(th[2], 0.5);
  EXPECT_FALSE(threshold_mapping_note().empty());
}

TEST(Accumulator, AveragesFramesAndPoolsTables) {
  MetricAccumulator acc(2, {0.5});
  const Tensor a0 = oracle::random_tensor(Shape{2, 1, 16, 16}, 1, 0.0, 1.0);
  const Tensor b0 = oracle::random_tensor(Shape{2, 1, 16, 16}, 2, 0.0, 1.0);
  const Tensor a1 = oracle::random_tensor(Shape{2, 1, 16, 16}, 3, 0.0, 1.0);
  const Tensor b1 = oracle::random_tensor(Shape{2, 1, 16, 16}, 4, 0.0, 1.0);
  acc.add(0, a0, b0);
  acc.add(1, a1, b1);
  const MetricReport r = acc.report();
  ASSERT_EQ(r.frames.size(), 2u);
  EXPECT_NEAR(r.frames[0].mse, oracle::mse(a0, b0), 1e-9);
  EXPECT_NEAR(r.overall.mse, (oracle::mse(a0, b0) + oracle::mse(a1, b1)) / 2, 1e-9);
  ContingencyTable pooled = contingency(a0, b0, 0.5);
  pooled += contingency(a1, b1, 0.5);
  EXPECT_DOUBLE_EQ(*r.overall.csi[0], *csi(pooled));

  const std::string csv = r.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "frame,mse,mae,ssim,psnr,csi_0.5,hss_0.5");
  EXPECT_NE(csv.find("\nall,"), std::string::npos);
}
