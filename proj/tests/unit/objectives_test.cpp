#include <gtest/gtest.h>

#include "ccr/objectives.hpp"
#include "gradient_check.hpp"

namespace {

class ParameterGradient : public ::testing::TestWithParam<ccr::LossKind> {};

TEST_P(ParameterGradient, MatchesCentralDifferences) {
  const auto outcome = gradcheck::check(GetParam(), 17);
  EXPECT_EQ(outcome.instances, 100);
  EXPECT_LT(outcome.worst_relative_error, 1e-4) << ccr::to_string(GetParam());
}

INSTANTIATE_TEST_SUITE_P(AllLosses, ParameterGradient, ::testing::ValuesIn(gradcheck::all_losses()),
                         [](const auto& info) { return std::string(ccr::to_string(info.param)); });

TEST(LossKind, NamesRoundTrip) {
  for (auto k : gradcheck::all_losses()) EXPECT_EQ(ccr::loss_kind_from_string(ccr::to_string(k)), k);
  EXPECT_THROW(ccr::loss_kind_from_string("listnet"), ccr::ParseError);
}

TEST(LossKind, CeilingsPairWithCounterparts) {
  for (auto k : {ccr::LossKind::OrigCcs, ccr::LossKind::MarginCcr, ccr::LossKind::TripletCcr,
                 ccr::LossKind::OrdRegCcr}) {
    const auto s = ccr::supervised_ceiling(k);
    EXPECT_TRUE(ccr::is_supervised(s));
    EXPECT_EQ(ccr::unsupervised_counterpart(s), k);
    EXPECT_EQ(ccr::sample_shape(s), ccr::sample_shape(k));
  }
  EXPECT_TRUE(ccr::uses_coral_probe(ccr::LossKind::SupervisedCoral));
  EXPECT_FALSE(ccr::uses_coral_probe(ccr::LossKind::TripletCcr));
}

TEST(PairObjective, SupervisedNeedsLabel) {
  const ccr::LinearProbe p{{1.0}, 0.0};
  const std::vector<double> a{1.0}, b{2.0};
  EXPECT_THROW(ccr::pair_objective(ccr::LossKind::SupervisedBce, p, {a, b, 0}, {}), ccr::ValidationError);
  EXPECT_THROW(ccr::pair_objective(ccr::LossKind::TripletCcr, p, {a, b, 1}, {}), ccr::ValidationError);
}

TEST(ListObjective, ScoreMatrixRowsNonIncreasing) {
  const ccr::CoralProbe p{{0.5, -0.25}, 2.0, 0.7};
  const std::vector<ccr::Vector> items{{1, 2}, {-3, 0.5}, {0, 0}, {2, 2}};
  const auto m = ccr::coral_score_matrix(p, items);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 1; c < 4; ++c) EXPECT_LE(m[r * 4 + c], m[r * 4 + c - 1]);
}

}  // namespace
