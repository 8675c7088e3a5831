#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ccr/activation_store.hpp"
#include "ccr/prompting.hpp"
#include "ccr/task_model.hpp"

// A deterministic stand-in for a language model. Every output is a pure
// function of the task, the arguments and the seed, so experiments can run
// end to end without model weights.
namespace ccr::mock {

// Unit direction along which gold ranks are planted. Depends on the seed
// only, so every task generated with the same seed shares it.
Vector planted_direction(std::size_t dim, std::uint64_t seed);

// x_n = gold_rank_n * direction + noise, noise ~ N(0, noise_sigma^2 I).
// gold_rank runs from 1 (lowest gold score) to N.
std::vector<ActivationRecord> embeddings(const RankingTask& task, std::span<const double> direction,
                                         double noise_sigma, std::uint64_t seed);
std::vector<ActivationRecord> embeddings(const RankingTask& task, std::size_t dim,
                                         double noise_sigma, std::uint64_t seed);

// ItemPair activations for every ordered pair (a, b):
//   pos = (r_a - r_b) * direction + yes_offset + noise
//   neg = (r_b - r_a) * direction + no_offset + noise
// The offsets form the two "Yes"/"No" clusters that per-class normalization
// removes.
std::vector<ActivationRecord> pair_embeddings(const RankingTask& task, std::size_t dim,
                                              double noise_sigma, std::uint64_t seed);

struct LogitConfig {
  // 1 reproduces gold exactly; 0 is pure noise.
  double fidelity = 1.0;
  // Token prior: added to "Yes" (pairs), to "5" (scale), or to whichever
  // option is listed first (lists).
  double bias = 0.0;
  std::uint64_t seed = 0;
};

// One record per ordered pair with "Yes"/"No" candidates, request ids from
// pair_request_id. Signal per pair is (r_a - r_b) / (N - 1).
std::vector<PairLogits> pair_logits(const RankingTask& task, const LogitConfig& cfg);

// One record per item over "0".."10" peaked at the item's scaled gold rank.
std::vector<LogitRecord> single_logits(const RankingTask& task, const LogitConfig& cfg);

// Answers listwise requests by scoring each remaining option with its gold
// rank (plus noise and the positional bias).
class ListwiseMock : public ListwiseModel {
 public:
  ListwiseMock(const RankingTask& task, LogitConfig cfg);
  LogitRecord respond(const ListwiseRequest& request) override;

 private:
  const RankingTask* task_;
  LogitConfig cfg_;
  std::vector<int> ranks_;
};

}  // namespace ccr::mock
