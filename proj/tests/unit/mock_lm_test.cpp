#include <gtest/gtest.h>

#include <cmath>

#include "ccr/evaluation.hpp"
#include "ccr/mock_lm.hpp"
#include "ccr/prompting.hpp"

namespace {

ccr::RankingTask task_of(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> items;
  std::vector<double> gold(n);
  for (std::size_t i = 0; i < n; ++i) {
    items.push_back("item" + std::to_string(i));
    gold[i] = static_cast<double>(i) * 1.5;
  }
  std::shuffle(gold.begin(), gold.end(), rng);
  return ccr::make_task("mock" + std::to_string(seed), "d", "weight", std::nullopt, items, gold);
}

TEST(MockEmbeddings, NoiselessPointsLieOnTheDirection) {
  const auto t = task_of(6, 3);
  const auto u = ccr::mock::planted_direction(16, 9);
  double norm = 0.0;
  for (double x : u) norm += x * x;
  EXPECT_NEAR(norm, 1.0, 1e-12);
  const auto recs = ccr::mock::embeddings(t, u, 0.0, 9);
  const auto ranks = t.gold_ranks();
  ASSERT_EQ(recs.size(), 6u);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(recs[i].item_index, i);
    for (std::size_t j = 0; j < 16; ++j) EXPECT_DOUBLE_EQ(recs[i].vector[j], ranks[i] * u[j]);
  }
}

TEST(MockEmbeddings, DeterministicPerSeed) {
  const auto t = task_of(5, 1);
  EXPECT_EQ(ccr::mock::embeddings(t, 8, 0.1, 4), ccr::mock::embeddings(t, 8, 0.1, 4));
  EXPECT_NE(ccr::mock::embeddings(t, 8, 0.1, 4), ccr::mock::embeddings(t, 8, 0.1, 5));
  EXPECT_EQ(ccr::mock::pair_embeddings(t, 8, 0.1, 4), ccr::mock::pair_embeddings(t, 8, 0.1, 4));
}

TEST(MockEmbeddings, PairRecordsCoverOrderedPairs) {
  const auto t = task_of(5, 2);
  const auto recs = ccr::mock::pair_embeddings(t, 4, 0.0, 1);
  EXPECT_EQ(recs.size(), 2u * 5u * 4u);
  for (const auto& r : recs) {
    ASSERT_TRUE(r.pair_index.has_value());
    EXPECT_NE(r.item_index, *r.pair_index);
  }
}

TEST(MockEmbeddings, MissingGoldIsError) {
  const auto t = ccr::make_task("x", "d", "c", std::nullopt, {"a", "b", "c", "d"});
  EXPECT_THROW(ccr::mock::embeddings(t, 4, 0.0, 1), ccr::ValidationError);
  EXPECT_THROW(ccr::mock::pair_logits(t, {}), ccr::ValidationError);
}

TEST(MockLogits, FullFidelityPairDecisionsMatchGold) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto t = task_of(7, s);
    const auto recs = ccr::mock::pair_logits(t, {1.0, 0.0, s});
    EXPECT_EQ(recs.size(), 42u);
    const auto decisions = ccr::decide_pairs(ccr::calibrate_pairwise(recs));
    for (const auto& d : decisions) {
      const std::size_t other = d.winner == d.a ? d.b : d.a;
      EXPECT_GT((*t.gold_scores)[d.winner], (*t.gold_scores)[other]);
    }
  }
}

TEST(MockLogits, YesBiasBreaksRawButNotCalibrated) {
  const auto t = task_of(6, 4);
  const auto recs = ccr::mock::pair_logits(t, {1.0, 5.0, 4});
  const auto raw = ccr::decide_pairs(ccr::uncalibrated_pairs(recs));
  for (const auto& d : raw) EXPECT_EQ(d.winner, d.a);  // always "Yes"
  const auto cal = ccr::decide_pairs(ccr::calibrate_pairwise(recs));
  const auto pred = ccr::pairs_to_ranking(t.task_id, t.size(), cal);
  const auto m = ccr::evaluate_ranking(pred, t, cal);
  EXPECT_DOUBLE_EQ(m.pairwise_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(m.tau, 1.0);
}

TEST(MockLogits, SingleLogitsPeakAtScaledRank) {
  const auto t = task_of(6, 5);
  const auto recs = ccr::mock::single_logits(t, {1.0, 0.0, 0});
  const auto ranks = t.gold_ranks();
  std::vector<ccr::PointwiseScore> scores;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    scores.push_back(ccr::pointwise_score(recs[i]));
    EXPECT_EQ(scores.back().rank_value, static_cast<int>(std::lround(10.0 * (ranks[i] - 1) / 5.0)));
  }
  const auto pred = ccr::pointwise_ranking(t.task_id, scores);
  EXPECT_EQ(pred.order, *t.gold_ranking);
}

TEST(MockLogits, ListwiseFullFidelityRecoversGold) {
  const auto t = task_of(8, 6);
  ccr::mock::ListwiseMock model(t, {1.0, 0.0, 1});
  const auto pred = ccr::listwise_decode(t, model, {3, 2, ccr::RepeatAggregation::MeanRank});
  EXPECT_EQ(pred.order, *t.gold_ranking);
}

TEST(MockLogits, LowFidelityIsNoisierThanHigh) {
  double high = 0.0, low = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto t = task_of(8, 100 + s);
    for (auto [fid, acc] : {std::pair{0.9, &high}, std::pair{0.0, &low}}) {
      const auto d = ccr::decide_pairs(ccr::calibrate_pairwise(ccr::mock::pair_logits(t, {fid, 0.0, s})));
      *acc += ccr::evaluate_ranking(ccr::pairs_to_ranking(t.task_id, t.size(), d), t, d).pairwise_accuracy;
    }
  }
  EXPECT_GT(high / 20, 0.9);
  EXPECT_LT(low / 20, 0.7);
}

TEST(MockLogits, Deterministic) {
  const auto t = task_of(6, 7);
  const auto a = ccr::mock::pair_logits(t, {0.5, 0.3, 11});
  const auto b = ccr::mock::pair_logits(t, {0.5, 0.3, 11});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].record, b[i].record);
  EXPECT_EQ(ccr::mock::single_logits(t, {0.5, 0.3, 11}), ccr::mock::single_logits(t, {0.5, 0.3, 11}));
}

}  // namespace
