#include "maqm/memory.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "test_support.hpp"

using namespace maqm;

namespace {

MemorySpec spec_65() {
  MemorySpec s = maqm1_default();
  s.tau_mem_us = 65.0;
  s.t_larmor_us = 7.8;
  return s;
}

}  // namespace

TEST(Survival, Examples) {
  const auto s = spec_65();
  EXPECT_DOUBLE_EQ(survival(s, 0.0), 1.0);
  EXPECT_NEAR(survival(s, 15.6), std::exp(-std::pow(15.6 / 65.0, 2)), 1e-12);
  EXPECT_NEAR(survival(s, 15.6), 0.9441, 1e-4);
  EXPECT_NEAR(survival(s, 7.8 / 2), 0.0, 1e-15);
  EXPECT_THROW(survival(s, -1.0), std::invalid_argument);
}

TEST(Survival, InfiniteMemoryTimeKeepsOnlyLarmor) {
  auto s = spec_65();
  s.tau_mem_us = std::numeric_limits<double>::infinity();
  EXPECT_NEAR(survival(s, 31.2), 1.0, 1e-12);
}

TEST(Survival, Properties) {
  const auto s = spec_65();
  double previous = 1.0;
  for (int k = 0; k < 40; ++k) {
    const double v = survival(s, k * s.t_larmor_us);
    EXPECT_LE(v, previous + 1e-15);
    EXPECT_NEAR(v, std::exp(-std::pow(k * s.t_larmor_us / s.tau_mem_us, 2)), 1e-12);
    previous = v;
  }
  for (double t = 0.0; t < 200.0; t += 0.37) {
    EXPECT_LE(survival(s, t), 1.0);
    EXPECT_GE(survival(s, t), 0.0);
  }
}

TEST(CellEfficiency, Lookup) {
  auto s = maqm1_default();
  s.eta_read = CellMap::uniform(5, 6, 0.25);
  EXPECT_DOUBLE_EQ(cell_efficiency(s, {MemoryId::maqm1, 3, 4}, EfficiencyStage::read), 0.25);
  s.eta_read.at(2, 3) = 0.18;
  EXPECT_DOUBLE_EQ(cell_efficiency(s, {MemoryId::maqm1, 2, 3}, EfficiencyStage::read), 0.18);
  EXPECT_THROW(cell_efficiency(s, {MemoryId::maqm1, 5, 0}, EfficiencyStage::read), std::out_of_range);
  EXPECT_THROW(cell_efficiency(s, {MemoryId::maqm2, 0, 0}, EfficiencyStage::read), std::out_of_range);
}

TEST(MemorySpec, ValidateRejectsOutOfRangeEfficiency) {
  auto s = maqm1_default();
  s.eta_read.at(0, 0) = 1.2;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = maqm1_default();
  s.tau_mem_us = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = maqm1_default();
  s.crosstalk_eps = 0.5;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(MemorySpec, DefaultsMatchPaperGrids) {
  const auto m1 = maqm1_default();
  const auto m2 = maqm2_default();
  EXPECT_EQ(m1.n_x, 5);
  EXPECT_EQ(m1.n_y, 6);
  EXPECT_DOUBLE_EQ(m1.tau_mem_us, 65.0);
  EXPECT_DOUBLE_EQ(m2.tau_mem_us, 27.8);
  for (double v : m1.eta_read.values()) {
    EXPECT_GE(v, 0.10);
    EXPECT_LE(v, 0.30);
  }
  for (double v : m2.eta_eit.values()) {
    EXPECT_GE(v, 0.10);
    EXPECT_LE(v, 0.30);
  }
  EXPECT_EQ(maqm1_default().eta_read.values(), m1.eta_read.values());
}

TEST(EitProbe, LosslessIsExact) {
  auto s = maqm::testing::lossless(maqm2_default());
  s.t_larmor_us = 1.3;
  const auto est = eit_efficiency_probe(s, {MemoryId::maqm2, 1, 1}, 7.8, 0.5, 1000, 3);
  EXPECT_DOUBLE_EQ(est.estimate, 1.0);
  EXPECT_DOUBLE_EQ(est.std_error, 0.0);
}

TEST(EitProbe, WithinThreeSigmaOfAnalyticProduct) {
  auto s = maqm2_default();
  s.eta_eit = CellMap::uniform(5, 6, 0.2);
  const CellAddress cell{MemoryId::maqm2, 2, 2};
  const double truth = 0.2 * survival(s, 7.8);
  const auto est = eit_efficiency_probe(s, cell, 7.8, 0.5, 100000, 2024);
  EXPECT_LT(std::abs(est.estimate - truth), 3.0 * est.std_error);
  EXPECT_GT(est.photons_in, 40000u);
}

TEST(EitProbe, Deterministic) {
  auto s = maqm2_default();
  const CellAddress cell{MemoryId::maqm2, 1, 1};
  const auto a = eit_efficiency_probe(s, cell, 7.8, 0.5, 5000, 9);
  const auto b = eit_efficiency_probe(s, cell, 7.8, 0.5, 5000, 9);
  EXPECT_EQ(a.detected, b.detected);
  EXPECT_EQ(a.photons_in, b.photons_in);
  EXPECT_EQ(a.estimate, b.estimate);
}

TEST(EitProbe, ErrorShrinksAsInverseSqrtShots) {
  auto s = maqm2_default();
  s.eta_eit = CellMap::uniform(5, 6, 0.2);
  const CellAddress cell{MemoryId::maqm2, 0, 0};
  const double truth = 0.2 * survival(s, 7.8);
  double rms_small = 0.0, rms_large = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    rms_small += std::pow(eit_efficiency_probe(s, cell, 7.8, 0.5, 1000, seed).estimate - truth, 2);
    rms_large += std::pow(eit_efficiency_probe(s, cell, 7.8, 0.5, 100000, seed + 100).estimate - truth, 2);
  }
  const double ratio = std::sqrt(rms_small / rms_large);
  // Expected sqrt(100) = 10; 20 seeds leave a wide sampling spread.
  EXPECT_GT(ratio, 5.0);
  EXPECT_LT(ratio, 20.0);
}

TEST(EitProbe, RejectsBadArguments) {
  const auto s = maqm2_default();
  EXPECT_THROW(eit_efficiency_probe(s, {MemoryId::maqm2, 0, 0}, 7.8, 0.0, 10, 1), std::invalid_argument);
  EXPECT_THROW(eit_efficiency_probe(s, {MemoryId::maqm2, 0, 0}, 7.8, 0.5, 0, 1), std::invalid_argument);
}

TEST(Crosstalk, ZeroEps) {
  auto s = maqm2_default();
  const CellAddress c{MemoryId::maqm2, 2, 2};
  const auto map = crosstalk_map(s, c);
  ASSERT_EQ(map.size(), 1u);
  EXPECT_EQ(map[0].first, c);
  EXPECT_DOUBLE_EQ(map[0].second, 1.0);
}

TEST(Crosstalk, InteriorAndCorner) {
  auto s = maqm2_default();
  s.crosstalk_eps = 0.04;
  const auto interior = crosstalk_map(s, {MemoryId::maqm2, 2, 2});
  ASSERT_EQ(interior.size(), 5u);
  EXPECT_NEAR(interior[0].second, 0.96, 1e-15);
  for (std::size_t i = 1; i < 5; ++i) EXPECT_NEAR(interior[i].second, 0.01, 1e-15);
  const auto corner = crosstalk_map(s, {MemoryId::maqm2, 0, 0});
  ASSERT_EQ(corner.size(), 3u);
  EXPECT_NEAR(corner[0].second, 0.96, 1e-15);
  EXPECT_NEAR(corner[1].second, 0.02, 1e-15);
  EXPECT_NEAR(corner[2].second, 0.02, 1e-15);
}

TEST(Crosstalk, SumsToOneEverywhere) {
  for (int nx = 1; nx <= 5; ++nx) {
    for (int ny = 1; ny <= 6; ++ny) {
      MemorySpec s = maqm2_default();
      s.n_x = nx;
      s.n_y = ny;
      s.eta_write = s.eta_read = s.eta_eit = CellMap::uniform(nx, ny, 0.5);
      s.crosstalk_eps = 0.3;
      for (int x = 0; x < nx; ++x) {
        for (int y = 0; y < ny; ++y) {
          double sum = 0.0;
          for (const auto& [cell, amp] : crosstalk_map(s, {MemoryId::maqm2, x, y})) sum += amp;
          EXPECT_NEAR(sum, 1.0, 1e-12) << nx << "x" << ny << " at " << x << "," << y;
        }
      }
    }
  }
}
