#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccr/common.hpp"
#include "ccr/task_model.hpp"

namespace ccr {

// A strict ordering of item indices, best first.
struct RankingPrediction {
  std::string task_id;
  std::vector<std::size_t> order;
  std::optional<Vector> item_scores;
  // Set when some positions were decided only by item index.
  bool residual_ties = false;
};

bool is_permutation(std::span<const std::size_t> order);

// Sorts items by score, highest first; exact ties fall back to item index and
// set residual_ties.
RankingPrediction ranking_from_scores(std::string task_id, Vector scores);

// Kendall's tau between two orderings of the same items (no ties), counted
// in O(N log N) via merge-sort inversions.
double kendall_tau(std::span<const std::size_t> predicted, std::span<const std::size_t> gold);
// Direction-invariant variant: a ranking and its reverse score the same.
double tau_abs(std::span<const std::size_t> predicted, std::span<const std::size_t> gold);

// One pairwise comparison outcome. `score` is the strength of the decision
// and is credited to the winner when breaking win-count ties.
struct PairDecision {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t winner = 0;
  double score = 0.0;
  // Decided by a fixed convention because the evidence was exactly tied.
  bool tie = false;
};

// Fraction of decisions agreeing with gold, reversed when the reversed
// reading agrees more often. Always in [0.5, 1].
double pairwise_accuracy(std::span<const PairDecision> decisions, std::span<const double> gold_scores);
// Agreement without the reversal.
double raw_pairwise_agreement(std::span<const PairDecision> decisions,
                              std::span<const double> gold_scores);

// Copeland-style aggregation: one point per win; ties broken by the summed
// decision scores of each item's wins, then by index (flagged). Every
// unordered pair of the n items must be decided at least once.
RankingPrediction pairs_to_ranking(std::string task_id, std::size_t n,
                                   std::span<const PairDecision> decisions);

// The higher-ranked item of every pair wins, with unit score.
std::vector<PairDecision> ranking_to_pairs(const RankingPrediction& prediction,
                                           PairMode mode = PairMode::Permutations);

struct TaskMetrics {
  std::string task_id;
  double tau = 0.0;
  double tau_abs = 0.0;
  double pairwise_accuracy = 0.5;
  bool residual_ties = false;
};

// Scores a ranking against the task's gold order. Pairwise accuracy is taken
// over all item combinations implied by the ranking.
TaskMetrics evaluate_ranking(const RankingPrediction& prediction, const RankingTask& task);
// As above, but pairwise accuracy comes from the explicit decisions.
TaskMetrics evaluate_ranking(const RankingPrediction& prediction, const RankingTask& task,
                             std::span<const PairDecision> decisions);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t count = 0;
};

Summary summarize(std::span<const double> values);

// Task-level metrics from one run plus their means.
struct RunMetrics {
  std::vector<TaskMetrics> tasks;
  double tau_abs = 0.0;
  double pairwise_accuracy = 0.0;
};

RunMetrics make_run_metrics(std::vector<TaskMetrics> tasks);

struct MetricReport {
  Summary tau_abs;
  Summary pairwise_accuracy;
  std::vector<RunMetrics> runs;
};

// Mean and population standard deviation across runs.
MetricReport aggregate_runs(std::vector<RunMetrics> runs);

}  // namespace ccr
