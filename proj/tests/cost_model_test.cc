#include "telsm/cost_model.h"

#include <cmath>

#include "test_util.h"

namespace telsm::cost {
namespace {

constexpr double kTB = 1024.0 * 1024 * 1024 * 1024;
constexpr double kMB = 1024.0 * 1024;

Params ThroughputExample() {
  Params p;
  p.N = 100 * kTB;
  p.B = 64 * kMB;
  p.T = 10;
  p.WB_disk = 417;
  return p;
}

Params PointBase(double L) {
  Params p;
  p.L = L;
  p.Z = 2;
  p.P_false = 0.01;
  p.R = 5000;
  p.blksz = 4096;
  p.T = 10;
  p.m = 100;
  return p;
}

void ExpectWithin(double got, double want, double tol) {
  EXPECT_LE(std::abs(got - want), tol * std::abs(want)) << got << " vs " << want;
}

TEST(CostModel, WriteThroughputExamples) {
  Params p = ThroughputExample();
  ExpectWithin(WMaxCwt(p), 52.75, 0.02);
  p.n = 2;
  ExpectWithin(WMaxTec(p), 42.10, 0.02);
  ExpectWithin(WMaxTec(p) / WMaxCwt(p), 0.80, 0.02);
}

TEST(CostModel, WriteAmplificationDirect) {
  Params p;
  p.N = 1024 * kMB;
  p.B = 64 * kMB;
  p.T = 4;
  p.WB_disk = 417;
  // log_4(16) = 2, WA = 1 + 4/3 * 2.
  EXPECT_NEAR(WaCwt(p), 11.0 / 3.0, 1e-12);
  EXPECT_NEAR(WMaxCwt(p), 417 / (11.0 / 3.0), 1e-9);
  p.N = p.B;
  EXPECT_DOUBLE_EQ(WaCwt(p), 1.0);
  p.N = p.B / 2;
  EXPECT_DOUBLE_EQ(WaCwt(p), 1.0);
}

TEST(CostModel, TecDegeneratesToCwt) {
  Params p = ThroughputExample();
  EXPECT_DOUBLE_EQ(WMaxTec(p), WMaxCwt(p));
  p.RB_disk = 1000;
  p.T_r = 1000;
  p.WB_disk = 2000;
  p.n = 1;
  EXPECT_NEAR(WMaxTec(p) * WaTec(p), 500.0, 1e-9);
  p.WB_disk = 300;
  EXPECT_NEAR(WMaxTec(p) * WaTec(p), 300.0, 1e-9);
}

TEST(CostModel, PointQueryExamples) {
  Params convert = Params::ConvertScenario(PointBase(6), 3500);
  ExpectWithin(PqCost(convert, PointMode::kPQRA), 1.10, 0.02);
  ExpectWithin(PqCost(convert, PointMode::kPQRC), 1.10, 0.02);

  Params split = Params::SplitScenario(PointBase(5), 3);
  EXPECT_EQ(split.s_n, 8);
  ExpectWithin(PqCost(split, PointMode::kPQRA), 8.13, 0.02);
  ExpectWithin(PqCost(split, PointMode::kPQRC), 1.13, 0.02);

  ExpectWithin(PqCost(PointBase(6), PointMode::kPQRA), 2.08, 0.02);
}

TEST(CostModel, RangeQueryExamples) {
  // blksz 4096 lands a few percent under the quoted figures.
  ExpectWithin(RqCost(PointBase(6), Config::kCWT), 138.88, 0.05);
  ExpectWithin(RqCost(Params::ConvertScenario(PointBase(6), 3500), Config::kTEC), 97.78, 0.05);
  ExpectWithin(RqCost(Params::SplitScenario(PointBase(5), 3), Config::kTEC), 17.78, 0.05);
  // Direct evaluation: 100 * 5000 / 4096 * 1.111111.
  EXPECT_NEAR(RqCost(PointBase(6), Config::kCWT), 500000.0 / 4096 * 1.111111, 1e-3);
  Params p = PointBase(6);
  p.blksz = 4000;
  EXPECT_NEAR(RqCost(p, Config::kCWT), 138.8888, 1e-3);
  p.m = 0;
  EXPECT_EQ(RqCost(p, Config::kCWT), 0);
}

TEST(CostModel, RangeCostLinearInM) {
  Params p = Params::SplitScenario(PointBase(5), 3);
  double one = RqCost(p, Config::kTEC);
  p.m = 300;
  EXPECT_NEAR(RqCost(p, Config::kTEC), 3 * one, 1e-9);
}

TEST(CostModel, SpaceAmplification) {
  Params p;
  p.K = 16;
  p.s_n = 8;
  p.N = 1e9;
  p.R = 5000;
  p.T = 10;
  EXPECT_NEAR(SpaceAmp(p, SpaceKind::kSplit), 2.24e6, 1e-3);
  p.s_n = 1;
  EXPECT_EQ(SpaceAmp(p, SpaceKind::kSplit), 0);
  p.R_prime = p.R;
  EXPECT_NEAR(SpaceAmp(p, SpaceKind::kConvert), p.N / p.T, 1e-6);
  EXPECT_NEAR(SpaceAmp(p, SpaceKind::kIndex), 0.1, 1e-12);
}

TEST(CostModel, Monotonicity) {
  Params p = ThroughputExample();
  double prev = WMaxTec(p);
  for (double n = 1; n < 5; n += 0.5) {
    p.n = n;
    EXPECT_LE(WMaxTec(p), prev);
    prev = WMaxTec(p);
  }
  Params q = Params::SplitScenario(PointBase(5), 3);
  for (auto bump : {&Params::P_false, &Params::Z, &Params::n}) {
    Params r = q;
    double before = PqCost(r, PointMode::kPQRC);
    r.*bump += 0.5;
    EXPECT_GE(PqCost(r, PointMode::kPQRC), before);
  }
}

TEST(CostModel, CompareReportScenarios) {
  Params split = Params::SplitScenario(PointBase(5), 3);
  split.N = 100 * kTB;
  split.B = 64 * kMB;
  split.WB_disk = 417;
  split.n = 2;
  split.R_j = {2500, 1250};
  split.s_n = 8;
  Report r = CompareReport(split);
  ExpectWithin(r.write_ratio, 0.80, 0.02);
  EXPECT_TRUE(r.beneficial);

  Report s3 = CompareReport(Params::SplitScenario(PointBase(5), 3));
  ExpectWithin(s3.range_ratio, 7.8, 0.05);

  Report c = CompareReport(Params::ConvertScenario(PointBase(6), 3500));
  ExpectWithin(c.range_ratio, 1.4, 0.05);

  Report same = CompareReport(PointBase(6));
  EXPECT_DOUBLE_EQ(same.write_ratio, 1);
  EXPECT_DOUBLE_EQ(same.pqra_ratio, 1);
  EXPECT_DOUBLE_EQ(same.pqrc_ratio, 1);
  EXPECT_DOUBLE_EQ(same.range_ratio, 1);
  EXPECT_FALSE(same.beneficial);
}

TEST(CostModel, ParamsFromKeyValues) {
  Params p;
  ASSERT_OK(p.Apply({{"N", "1e9"}, {"T", "10"}, {"R_j", "100, 50"}, {"n", "2"}}));
  EXPECT_EQ(p.N, 1e9);
  EXPECT_EQ(p.R_j, (std::vector<double>{100, 50}));
  EXPECT_FALSE(p.Apply({{"bogus", "1"}}).ok());
  EXPECT_FALSE(p.Apply({{"T", "x"}}).ok());
  EXPECT_FALSE(p.Apply({{"T", "1"}}).ok());
}

}  // namespace
}  // namespace telsm::cost
