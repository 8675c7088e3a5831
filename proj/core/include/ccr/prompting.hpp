#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccr/activation_store.hpp"
#include "ccr/evaluation.hpp"
#include "ccr/task_model.hpp"

namespace ccr {

// Prompt templates. Context, when a task has one, is prepended.
enum class PromptType { ItemPair, ItemSingle, ItemList };

std::string_view to_string(PromptType type);
PromptType prompt_type_from_string(std::string_view text);

inline constexpr std::string_view kYesToken = "Yes";
inline constexpr std::string_view kNoToken = "No";
inline constexpr std::string_view kMaskToken = "[MASK]";
inline constexpr int kScaleMax = 10;

// "0", "1", ..., "10"
std::vector<std::string> scale_candidates();
// "A", "B", ..., "Z", "AA", "AB", ...
std::string option_label(std::size_t position);

// Is {a} more in terms of {criterion} than {b}? {completion}
std::string render_pair_prompt(const RankingTask& task, std::size_t a, std::size_t b,
                               std::string_view completion);
// [On a scale from 0 to 10,] The {criterion} of {item} is {completion}
std::string render_single_prompt(const RankingTask& task, std::size_t item, bool with_scale,
                                 std::string_view completion);
// Order by {criterion}. Options: "A" {item}, "B" {item}... The correct ordering is: {chosen}
std::string render_list_prompt(const RankingTask& task, std::span<const std::size_t> presented,
                               std::span<const std::string> chosen_labels);

struct CalibratedPair {
  std::string task_id;
  ItemPair pair;
  double yes_score = 0.0;
  double no_score = 0.0;
};

// A pair prompt's logit record together with the pair it asked about.
struct PairLogits {
  ItemPair pair;
  LogitRecord record;
};

// Subtracts the mean "Yes" logit and the mean "No" logit (over all pair
// prompts given) from each record.
std::vector<CalibratedPair> calibrate_pairwise(std::span<const PairLogits> records);
// Same shape without the mean subtraction.
std::vector<CalibratedPair> uncalibrated_pairs(std::span<const PairLogits> records);

// The first item wins when yes_score > no_score; on an exact tie the second
// item wins and the decision is flagged. score = yes_score - no_score.
PairDecision decide_pair(const CalibratedPair& pair);
std::vector<PairDecision> decide_pairs(std::span<const CalibratedPair> pairs);

struct PointwiseScore {
  int rank_value = 0;     // argmax candidate on the 0..10 scale
  double tiebreak = 0.0;  // the winning candidate's logit
  bool argmax_tie = false;
};

// Argmax over "0".."10"; exact ties choose the lowest value and are flagged.
PointwiseScore pointwise_score(const LogitRecord& record);

// Orders items by rank value, then tiebreak logit, then index.
RankingPrediction pointwise_ranking(std::string task_id, std::span<const PointwiseScore> scores);

// One round of step-wise listwise decoding.
struct ListwiseRequest {
  std::string request_id;
  std::string task_id;
  std::size_t repeat = 0;
  std::size_t step = 0;
  std::vector<std::size_t> presented;  // every option in this repeat's shuffled order
  std::vector<std::size_t> remaining;  // still-available options, in presented order
  std::vector<std::string> chosen_labels;
  std::vector<std::string> candidates;  // labels of `remaining`
  std::string prompt_text;
};

std::string request_to_json(const ListwiseRequest& request);
ListwiseRequest request_from_json(std::string_view line);

// Source of per-step logits: a language model, a mock, or a response file.
class ListwiseModel {
 public:
  virtual ~ListwiseModel() = default;
  virtual LogitRecord respond(const ListwiseRequest& request) = 0;
};

// State of one decoding pass: chosen and remaining are disjoint and together
// cover all options.
class ListwiseSession {
 public:
  ListwiseSession(const RankingTask& task, std::size_t repeat, std::uint64_t shuffle_seed);

  bool done() const { return remaining_.empty(); }
  ListwiseRequest next_request() const;
  // Picks the argmax candidate of `response` (earliest presented on exact
  // ties). Throws ValidationError if the candidates differ from the
  // remaining options.
  void apply(const LogitRecord& response);

  const std::vector<std::size_t>& presented() const { return presented_; }
  const std::vector<std::size_t>& chosen() const { return chosen_; }
  const std::vector<std::size_t>& remaining() const { return remaining_; }
  // Decisions where the best logit was shared by several options.
  std::size_t tie_count() const { return ties_; }

 private:
  const RankingTask* task_;
  std::size_t repeat_;
  std::vector<std::size_t> presented_;
  std::vector<std::size_t> remaining_;
  std::vector<std::size_t> chosen_;
  std::vector<std::string> labels_;  // label per item index
  std::size_t ties_ = 0;
};

enum class RepeatAggregation { MeanRank, Borda };

struct ListwiseOptions {
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
  RepeatAggregation aggregation = RepeatAggregation::MeanRank;
};

// Runs `repeats` shuffled decoding passes (repeat r shuffles with seed + r)
// and aggregates them by mean position; ties go to the first repeat's order.
RankingPrediction listwise_decode(const RankingTask& task, ListwiseModel& model,
                                  const ListwiseOptions& options);

// Stable id for a request; a pure function of its content.
std::string listwise_request_id(const std::string& task_id, std::size_t repeat,
                                std::span<const std::size_t> presented,
                                std::span<const std::size_t> chosen);
std::string pair_request_id(const std::string& task_id, std::size_t a, std::size_t b);
std::string single_request_id(const std::string& task_id, std::size_t item);

}  // namespace ccr
