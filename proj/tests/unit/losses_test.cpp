#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "ccr/losses.hpp"
#include "oracles.hpp"

namespace {

constexpr double kTol = 1e-9;

TEST(OrigCcs, PerfectContrastIsZero) { EXPECT_NEAR(ccr::orig_ccs(1.0, 0.0).total, 0.0, kTol); }

TEST(OrigCcs, UndecidedPaysConfidence) {
  const auto v = ccr::orig_ccs(0.5, 0.5);
  EXPECT_NEAR(v.total, 0.25, kTol);
  EXPECT_NEAR(v.consistency, 0.0, kTol);
  EXPECT_NEAR(v.confidence, 0.25, kTol);
}

TEST(OrigCcs, MixedExample) { EXPECT_NEAR(ccr::orig_ccs(0.8, 0.3).total, 0.10, kTol); }

TEST(OrigCcs, ComplementaryScoresAreConsistent) {
  for (double s = 0.0; s <= 1.0; s += 0.01) EXPECT_NEAR(ccr::orig_ccs(s, 1.0 - s).consistency, 0.0, 1e-15);
}

TEST(MarginCcr, Examples) {
  EXPECT_NEAR(ccr::margin_ccr(0.9, 0.1).total, 0.0, kTol);
  EXPECT_NEAR(ccr::margin_ccr(0.5, 0.5).total, 0.2, kTol);
  EXPECT_NEAR(ccr::margin_ccr(0.55, 0.45).total, 0.1, kTol);
}

TEST(TripletCcr, Examples) {
  // anchor 0.5, a at distance 0.1, b at distance 0.5
  EXPECT_NEAR(ccr::triplet_ccr(0.5, 0.6, 0.0).total, 0.0, kTol);
  EXPECT_NEAR(ccr::triplet_ccr(0.4, 0.4, 0.4).total, 0.25, kTol);
  const auto eq = ccr::triplet_ccr(0.5, 0.2, 0.8);
  EXPECT_NEAR(eq.total, 0.2, kTol);
  EXPECT_NEAR(eq.consistency, 0.2, kTol);
  EXPECT_NEAR(eq.confidence, 0.0, kTol);
}

TEST(SymmetricLosses, SwappingAandBIsExact) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 2000; ++t) {
    const double c = u(rng), a = u(rng), b = u(rng);
    EXPECT_EQ(ccr::margin_ccr(a, b).total, ccr::margin_ccr(b, a).total);
    EXPECT_EQ(ccr::triplet_ccr(c, a, b).total, ccr::triplet_ccr(c, b, a).total);
  }
}

TEST(OrdRegCcr, TwoByTwoStaircaseIsZero) {
  const std::vector<double> m{1, 1, 1, 0};
  EXPECT_EQ(ccr::ordreg_ccr(m, 2, 2).total, 0.0);
}

TEST(OrdRegCcr, AllHalvesTwoByTwo) {
  const std::vector<double> m(4, 0.5);
  const auto v = ccr::ordreg_ccr(m, 2, 2);
  EXPECT_NEAR(v.consistency, 1.0, kTol);
  EXPECT_NEAR(v.confidence, 2.0, kTol);
  EXPECT_NEAR(v.total, 3.0, kTol);
}

TEST(OrdRegCcr, SquaredSwitch) {
  ccr::LossConfig cfg;
  cfg.column_penalty = ccr::ConsistencyPenalty::Squared;
  const std::vector<double> m(9, 0.0);
  // columns should sum to 3, 2, 1
  EXPECT_NEAR(ccr::ordreg_ccr(m, 3, 3, cfg).consistency, 9.0 + 4.0 + 1.0, kTol);
  EXPECT_NEAR(ccr::ordreg_ccr(m, 3, 3).consistency, 6.0, kTol);
}

TEST(OrdRegCcr, NonSquareIsRejected) {
  const std::vector<double> m(6, 0.5);
  EXPECT_THROW(ccr::ordreg_ccr(m, 2, 3), ccr::ValidationError);
  EXPECT_THROW(ccr::ordreg_ccr(m, 3, 3), ccr::Error);
}

std::vector<double> staircase_rows(const std::vector<std::size_t>& ranks) {
  const std::size_t k = ranks.size();
  std::vector<double> m(k * k, 0.0);
  for (std::size_t n = 0; n < k; ++n)
    for (std::size_t j = 0; j < ranks[n]; ++j) m[n * k + j] = 1.0;
  return m;
}

TEST(OrdRegCcr, EveryStaircasePermutationIsExactlyZero) {
  for (std::size_t k = 1; k <= 6; ++k) {
    for (auto perm : oracle::all_permutations(k)) {
      for (auto& r : perm) ++r;
      EXPECT_EQ(ccr::ordreg_ccr(staircase_rows(perm), k, k).total, 0.0);
    }
  }
}

// Over binary matrices whose rows are non-increasing (the only rows a CORAL
// probe can produce), zero loss happens exactly on row permutations of the
// staircase. Without the monotone-row restriction, zero loss is exactly
// "column k sums to K - k + 1".
TEST(OrdRegCcr, ZeroSetOverBinaryMatricesIsExhaustive) {
  for (std::size_t k = 1; k <= 4; ++k) {
    const std::size_t cells = k * k;
    for (std::uint32_t bits = 0; bits < (1u << cells); ++bits) {
      std::vector<double> m(cells);
      for (std::size_t i = 0; i < cells; ++i) m[i] = (bits >> i) & 1u;
      const double loss = ccr::ordreg_ccr(m, k, k).total;

      bool columns_match = true;
      for (std::size_t j = 0; j < k; ++j) {
        double s = 0;
        for (std::size_t n = 0; n < k; ++n) s += m[n * k + j];
        columns_match = columns_match && s == static_cast<double>(k - j);
      }
      EXPECT_EQ(loss == 0.0, columns_match);

      bool monotone = true;
      std::vector<std::size_t> ones;
      for (std::size_t n = 0; n < k; ++n) {
        std::size_t c = 0;
        for (std::size_t j = 0; j < k; ++j) {
          if (j && m[n * k + j] > m[n * k + j - 1]) monotone = false;
          c += m[n * k + j] == 1.0;
        }
        ones.push_back(c);
      }
      if (!monotone) continue;
      std::sort(ones.begin(), ones.end());
      bool staircase = true;
      for (std::size_t n = 0; n < k; ++n) staircase = staircase && ones[n] == n + 1;
      EXPECT_EQ(loss == 0.0, staircase);
    }
  }
}

TEST(Supervised, Examples) {
  EXPECT_NEAR(ccr::bce(1.0, 1.0).total, 0.0, kTol);
  EXPECT_NEAR(ccr::bce(0.0, 0.0).total, 0.0, kTol);
  EXPECT_NEAR(ccr::bce(0.5, 1.0).total, std::log(2.0), kTol);
  EXPECT_NEAR(ccr::max_margin(0.75, 0.25, +1).total, 0.0, kTol);
  EXPECT_NEAR(ccr::max_margin(0.25, 0.75, +1).total, 0.7, kTol);
  EXPECT_NEAR(ccr::max_margin(0.25, 0.75, -1).total, 0.0, kTol);
  const std::vector<double> m{1, 1, 1, 1, 0, 0, 1, 1, 0};
  const std::vector<int> ranks{3, 1, 2};
  EXPECT_NEAR(ccr::coral_ordinal(m, 3, 3, ranks).total, 0.0, kTol);
  EXPECT_NEAR(ccr::triplet_supervised(0.5, 0.5, 0.9).total, 0.0, kTol);
  EXPECT_NEAR(ccr::triplet_supervised(0.5, 0.6, 0.6).total, 0.2, kTol);
}

TEST(Supervised, BcePairLabelsFollowOrder) {
  // first_higher = +1 wants s_first -> 1 and s_second -> 0
  EXPECT_NEAR(ccr::bce_pair(1.0, 0.0, +1).total, 0.0, kTol);
  EXPECT_NEAR(ccr::bce_pair(0.0, 1.0, -1).total, 0.0, kTol);
  EXPECT_GT(ccr::bce_pair(0.0, 1.0, +1).total, 10.0);
}

TEST(LossConfig, RejectsNegativeMargins) {
  ccr::LossConfig cfg;
  cfg.margin = -0.1;
  EXPECT_THROW(cfg.validate(), ccr::ValidationError);
  cfg = {};
  cfg.positive_margin = -1;
  EXPECT_THROW(cfg.validate(), ccr::ValidationError);
}

// Score-level gradients against central differences on smooth points.
void check_score_gradient(const std::function<ccr::LossValue(const std::vector<double>&)>& loss,
                          std::size_t arity, std::uint64_t seed, double lo = 0.02, double hi = 0.98) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  const auto f = [&](const std::vector<double>& x) { return loss(x).total; };
  int checked = 0;
  while (checked < 100) {
    std::vector<double> x(arity);
    for (double& v : x) v = u(rng);
    if (!oracle::is_smooth_at(f, x, 1e-4)) continue;
    const auto numeric = oracle::fd_gradient(f, x, 1e-4);
    EXPECT_LT(oracle::max_relative_error(loss(x).gradient, numeric), 1e-4);
    ++checked;
  }
}

TEST(ScoreGradients, MatchFiniteDifferences) {
  check_score_gradient([](const auto& x) { return ccr::orig_ccs(x[0], x[1]); }, 2, 1);
  check_score_gradient([](const auto& x) { return ccr::margin_ccr(x[0], x[1]); }, 2, 2);
  check_score_gradient([](const auto& x) { return ccr::triplet_ccr(x[0], x[1], x[2]); }, 3, 3);
  check_score_gradient([](const auto& x) { return ccr::ordreg_ccr(x, 4, 4); }, 16, 4);
  check_score_gradient([](const auto& x) { return ccr::bce_pair(x[0], x[1], -1); }, 2, 5);
  check_score_gradient([](const auto& x) { return ccr::max_margin(x[0], x[1], +1); }, 2, 6);
  check_score_gradient([](const auto& x) { return ccr::triplet_supervised(x[0], x[1], x[2]); }, 3, 7);
  const std::vector<int> ranks{2, 4, 1, 3};
  check_score_gradient([&](const auto& x) { return ccr::coral_ordinal(x, 4, 4, ranks); }, 16, 8);
}

TEST(LossValue, TotalIsWeightedSumAndNonNegative) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  ccr::LossConfig cfg;
  cfg.consistency_weight = 0.7;
  cfg.confidence_weight = 2.0;
  for (int t = 0; t < 500; ++t) {
    const double a = u(rng), b = u(rng), c = u(rng);
    for (const auto& v : {ccr::orig_ccs(a, b, cfg), ccr::triplet_ccr(a, b, c, cfg), ccr::margin_ccr(a, b, cfg)}) {
      EXPECT_NEAR(v.total, 0.7 * v.consistency + 2.0 * v.confidence, 1e-12);
      EXPECT_GE(v.total, 0.0);
    }
  }
}

}  // namespace
